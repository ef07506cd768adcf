//! Pluggable operads: colours, typed operations, a composition oracle and
//! units, together with the built-in instances (identity, free monoid,
//! terminal, monoids, posets, free operads on a signature) and the
//! tree-substitution construction derived from any of them.
//!
//! Operations and colours are opaque tokens with decidable equality and a
//! total order. Infinite operation families (terminal, free monoid, the
//! tree-substitution construction) are enumerated lazily, bounded at use
//! sites by arity and node-count parameters.

use std::fmt;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::trees::{PTree, TreeTerm};

/// An edge type. `Unit` is the colour of single-coloured operads; `Elem`
/// indexes monoid/poset elements or signature colours; `OpCol` wraps an
/// operation of the inner operad in a derived tree-substitution operad.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Colour {
    Unit,
    Elem(u32),
    OpCol(Box<Op>),
}

impl Colour {
    pub fn token(&self) -> String {
        match self {
            Colour::Unit => ".".into(),
            Colour::Elem(i) => format!("c{i}"),
            Colour::OpCol(op) => format!("[{}]", op.token()),
        }
    }
}

/// An operation token.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    /// The single unary operation of the identity operad.
    Unary,
    /// The unique `n`-ary operation of the terminal or free-monoid operad.
    Arity(u32),
    /// A monoid element, acting as a unary operation.
    MElem(u32),
    /// A poset pair `a <= b`, a unary operation from colour `a` to `b`.
    PPair(u32, u32),
    /// A generating operation of a signature.
    SigOp(u32),
    /// A tree over the inner operad: operations of free and
    /// tree-substitution operads.
    Tree(Box<TreeTerm>),
}

impl Op {
    pub fn token(&self) -> String {
        match self {
            Op::Unary => "u".into(),
            Op::Arity(n) => format!("#{n}"),
            Op::MElem(i) => format!("m{i}"),
            Op::PPair(a, b) => format!("p{a}.{b}"),
            Op::SigOp(i) => format!("s{i}"),
            Op::Tree(t) => format!("{{{}}}", t.key_string()),
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum OperadError {
    #[error("malformed table: {0}")]
    MalformedTable(String),
    #[error("arity mismatch: operation expects {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("colour mismatch: {0}")]
    ColourMismatch(String),
    #[error("unsupported nesting: {0}")]
    UnsupportedNesting(String),
    #[error("colour domain is infinite: {0}")]
    InfiniteColourDomain(String),
    #[error("operation family is infinite: {0}")]
    InfiniteOpFamily(String),
    #[error("unknown operation or colour label: {0}")]
    UnknownLabel(String),
    #[error("operation does not belong to this operad: {0}")]
    ForeignOp(String),
}

/// Associative multiplication table with a two-sided unit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonoidTable {
    pub names: Vec<String>,
    pub table: Vec<Vec<usize>>,
    pub unit: usize,
}

impl MonoidTable {
    pub fn new(names: Vec<String>, table: Vec<Vec<usize>>) -> Result<MonoidTable, OperadError> {
        let n = names.len();
        if n == 0 {
            return Err(OperadError::MalformedTable("empty monoid".into()));
        }
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(OperadError::MalformedTable(
                "table is not square of element count".into(),
            ));
        }
        if table.iter().flatten().any(|v| *v >= n) {
            return Err(OperadError::MalformedTable("table entry out of range".into()));
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if table[table[i][j]][k] != table[i][table[j][k]] {
                        return Err(OperadError::MalformedTable(format!(
                            "not associative at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        let unit = (0..n)
            .find(|e| (0..n).all(|x| table[*e][x] == x && table[x][*e] == x))
            .ok_or_else(|| OperadError::MalformedTable("no two-sided unit".into()))?;
        Ok(MonoidTable { names, table, unit })
    }

    /// The cyclic group of order `n` under addition.
    pub fn cyclic(n: usize) -> MonoidTable {
        let names = (0..n).map(|i| i.to_string()).collect();
        let table = (0..n)
            .map(|i| (0..n).map(|j| (i + j) % n).collect())
            .collect();
        MonoidTable::new(names, table).expect("cyclic group is a monoid")
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }
}

/// A reflexive, transitive, antisymmetric relation on named elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PosetRel {
    pub names: Vec<String>,
    pub le: Vec<(usize, usize)>,
}

impl PosetRel {
    pub fn new(names: Vec<String>, le: Vec<(usize, usize)>) -> Result<PosetRel, OperadError> {
        let n = names.len();
        let mut rel = vec![vec![false; n]; n];
        for (a, b) in &le {
            if *a >= n || *b >= n {
                return Err(OperadError::MalformedTable("relation index out of range".into()));
            }
            rel[*a][*b] = true;
        }
        for i in 0..n {
            if !rel[i][i] {
                return Err(OperadError::MalformedTable(format!(
                    "relation not reflexive at {}",
                    names[i]
                )));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if rel[a][b] && rel[b][c] && !rel[a][c] {
                        return Err(OperadError::MalformedTable(format!(
                            "relation not transitive at ({},{},{})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a != b && rel[a][b] && rel[b][a] {
                    return Err(OperadError::MalformedTable(format!(
                        "relation not antisymmetric at ({},{})",
                        names[a], names[b]
                    )));
                }
            }
        }
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if rel[a][b] {
                    pairs.push((a, b));
                }
            }
        }
        Ok(PosetRel { names, le: pairs })
    }

    /// A linear chain `0 <= 1 <= ... <= n-1` with decimal names.
    pub fn chain(n: usize) -> PosetRel {
        let names: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let mut le = Vec::new();
        for a in 0..n {
            for b in a..n {
                le.push((a, b));
            }
        }
        PosetRel::new(names, le).expect("chain is a poset")
    }

    /// The diamond `a <= b <= d`, `a <= c <= d` with `b`, `c` incomparable.
    pub fn diamond() -> PosetRel {
        let names = vec!["a".into(), "b".into(), "c".into(), "d".into()];
        let le = vec![
            (0, 0),
            (1, 1),
            (2, 2),
            (3, 3),
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 3),
            (2, 3),
        ];
        PosetRel::new(names, le).expect("diamond is a poset")
    }

    pub fn holds(&self, a: usize, b: usize) -> bool {
        self.le.contains(&(a, b))
    }
}

/// A generating signature for a free operad.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub colour_names: Vec<String>,
    pub ops: Vec<SigDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigDecl {
    pub name: String,
    pub out: usize,
    pub ins: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperadKind {
    Identity,
    FreeMonoid,
    Terminal { reduced: bool },
    Monoid(MonoidTable),
    Poset(PosetRel),
    Free(Signature),
    Bd(Operad),
}

/// Shareable, immutable operad handle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operad(Arc<OperadKind>);

/// Descriptor consumed by [`make_operad`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperadDescriptor {
    Identity,
    FreeMonoid,
    Terminal,
    TerminalReduced,
    Monoid(Vec<String>, Vec<Vec<usize>>),
    Poset(Vec<String>, Vec<(usize, usize)>),
    Free(Signature),
    Bd(Box<OperadDescriptor>),
}

/// Builds a lawful operad handle from a descriptor, validating any
/// user-supplied table eagerly.
pub fn make_operad(desc: OperadDescriptor) -> Result<Operad, OperadError> {
    let kind = match desc {
        OperadDescriptor::Identity => OperadKind::Identity,
        OperadDescriptor::FreeMonoid => OperadKind::FreeMonoid,
        OperadDescriptor::Terminal => OperadKind::Terminal { reduced: false },
        OperadDescriptor::TerminalReduced => OperadKind::Terminal { reduced: true },
        OperadDescriptor::Monoid(names, table) => OperadKind::Monoid(MonoidTable::new(names, table)?),
        OperadDescriptor::Poset(names, le) => OperadKind::Poset(PosetRel::new(names, le)?),
        OperadDescriptor::Free(sig) => {
            for op in &sig.ops {
                if op.out >= sig.colour_names.len()
                    || op.ins.iter().any(|i| *i >= sig.colour_names.len())
                {
                    return Err(OperadError::MalformedTable(format!(
                        "signature operation {} references an unknown colour",
                        op.name
                    )));
                }
            }
            OperadKind::Free(sig)
        }
        OperadDescriptor::Bd(inner) => {
            let inner = make_operad(*inner)
                .map_err(|e| OperadError::UnsupportedNesting(e.to_string()))?;
            OperadKind::Bd(inner)
        }
    };
    Ok(Operad(Arc::new(kind)))
}

impl Operad {
    pub fn kind(&self) -> &OperadKind {
        &self.0
    }

    /// Child order convention: planar operads preserve slot order under
    /// canonicalization, non-planar ones sort branches.
    pub fn planar(&self) -> bool {
        match self.kind() {
            OperadKind::Identity | OperadKind::FreeMonoid | OperadKind::Free(_) => true,
            OperadKind::Terminal { .. } | OperadKind::Monoid(_) | OperadKind::Poset(_) => false,
            OperadKind::Bd(_) => true,
        }
    }

    /// All operations have arity one (category-like operads).
    pub fn is_unary(&self) -> bool {
        matches!(
            self.kind(),
            OperadKind::Identity | OperadKind::Monoid(_) | OperadKind::Poset(_)
        )
    }

    /// The colour set, when finite.
    pub fn colours(&self) -> Result<Vec<Colour>, OperadError> {
        match self.kind() {
            OperadKind::Identity
            | OperadKind::FreeMonoid
            | OperadKind::Terminal { .. }
            | OperadKind::Monoid(_) => Ok(vec![Colour::Unit]),
            OperadKind::Poset(p) => Ok((0..p.names.len() as u32).map(Colour::Elem).collect()),
            OperadKind::Free(sig) => Ok((0..sig.colour_names.len() as u32)
                .map(Colour::Elem)
                .collect()),
            OperadKind::Bd(inner) => {
                let ops = inner.finite_ops().ok_or_else(|| {
                    OperadError::InfiniteColourDomain(
                        "colours are the operations of the inner operad, which are infinite".into(),
                    )
                })?;
                Ok(ops.into_iter().map(|op| Colour::OpCol(Box::new(op))).collect())
            }
        }
    }

    /// All operations, when the whole family is finite.
    pub fn finite_ops(&self) -> Option<Vec<Op>> {
        match self.kind() {
            OperadKind::Identity => Some(vec![Op::Unary]),
            OperadKind::Monoid(m) => Some((0..m.names.len() as u32).map(Op::MElem).collect()),
            OperadKind::Poset(p) => Some(
                p.le
                    .iter()
                    .map(|(a, b)| Op::PPair(*a as u32, *b as u32))
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn arity(&self, op: &Op) -> usize {
        match op {
            Op::Unary | Op::MElem(_) | Op::PPair(_, _) => 1,
            Op::Arity(n) => *n as usize,
            Op::SigOp(i) => match self.kind() {
                OperadKind::Free(sig) => sig.ops[*i as usize].ins.len(),
                _ => panic!("signature operation outside a free operad"),
            },
            Op::Tree(t) => match self.kind() {
                OperadKind::Free(_) => t.leaf_count(),
                OperadKind::Bd(_) => t.node_count(),
                _ => panic!("tree operation outside a free or derived operad"),
            },
        }
    }

    pub fn output_colour(&self, op: &Op) -> Colour {
        match (self.kind(), op) {
            (OperadKind::Identity, Op::Unary) => Colour::Unit,
            (OperadKind::FreeMonoid, Op::Arity(_)) => Colour::Unit,
            (OperadKind::Terminal { .. }, Op::Arity(_)) => Colour::Unit,
            (OperadKind::Monoid(_), Op::MElem(_)) => Colour::Unit,
            (OperadKind::Poset(_), Op::PPair(_, b)) => Colour::Elem(*b),
            (OperadKind::Free(_), Op::Tree(t)) => t.colour().clone(),
            (OperadKind::Bd(inner), Op::Tree(t)) => Colour::OpCol(Box::new(
                residue_term(inner, t).expect("stored tree operation has a residue"),
            )),
            _ => panic!("operation does not belong to this operad"),
        }
    }

    pub fn input_colours(&self, op: &Op) -> Vec<Colour> {
        match (self.kind(), op) {
            (OperadKind::Identity, Op::Unary) => vec![Colour::Unit],
            (OperadKind::FreeMonoid, Op::Arity(n)) | (OperadKind::Terminal { .. }, Op::Arity(n)) => {
                vec![Colour::Unit; *n as usize]
            }
            (OperadKind::Monoid(_), Op::MElem(_)) => vec![Colour::Unit],
            (OperadKind::Poset(_), Op::PPair(a, _)) => vec![Colour::Elem(*a)],
            (OperadKind::Free(_), Op::Tree(t)) => {
                let mut cols = Vec::new();
                collect_leaf_colours(t, &mut cols);
                cols
            }
            (OperadKind::Bd(_), Op::Tree(t)) => {
                let mut cols = Vec::new();
                collect_node_ops(t, &mut |op| cols.push(Colour::OpCol(Box::new(op.clone()))));
                cols
            }
            _ => panic!("operation does not belong to this operad"),
        }
    }

    /// The unary identity operation on a colour (the monad unit).
    pub fn unit(&self, colour: &Colour) -> Op {
        match (self.kind(), colour) {
            (OperadKind::Identity, Colour::Unit) => Op::Unary,
            (OperadKind::FreeMonoid, Colour::Unit) | (OperadKind::Terminal { .. }, Colour::Unit) => {
                Op::Arity(1)
            }
            (OperadKind::Monoid(m), Colour::Unit) => Op::MElem(m.unit as u32),
            (OperadKind::Poset(_), Colour::Elem(a)) => Op::PPair(*a, *a),
            (OperadKind::Free(_), _) => Op::Tree(Box::new(TreeTerm::Trivial(colour.clone()))),
            (OperadKind::Bd(inner), Colour::OpCol(b)) => {
                let children = inner
                    .input_colours(b)
                    .into_iter()
                    .map(TreeTerm::Trivial)
                    .collect();
                Op::Tree(Box::new(TreeTerm::Node {
                    op: (**b).clone(),
                    colour: inner.output_colour(b),
                    children,
                }))
            }
            _ => panic!("colour does not belong to this operad"),
        }
    }

    /// Raw composition oracle; see [`op_compose`] for the checked variant.
    /// For unary operads the argument is multiplied on the left of the host
    /// (the argument sits on the leaf side).
    pub fn compose(&self, b: &Op, args: &[Op]) -> Result<Op, OperadError> {
        match self.kind() {
            OperadKind::Identity => Ok(Op::Unary),
            OperadKind::FreeMonoid | OperadKind::Terminal { .. } => {
                let total: usize = args.iter().map(|a| self.arity(a)).sum();
                Ok(Op::Arity(total as u32))
            }
            OperadKind::Monoid(m) => match (args.first(), b) {
                (Some(Op::MElem(a)), Op::MElem(bb)) => {
                    Ok(Op::MElem(m.mul(*a as usize, *bb as usize) as u32))
                }
                _ => Err(OperadError::ForeignOp("monoid composition".into())),
            },
            OperadKind::Poset(_) => match (args.first(), b) {
                (Some(Op::PPair(a, b1)), Op::PPair(b2, c)) if b1 == b2 => Ok(Op::PPair(*a, *c)),
                _ => Err(OperadError::ColourMismatch("poset composition".into())),
            },
            OperadKind::Free(_) => match b {
                Op::Tree(t) => {
                    let arg_terms: Vec<&TreeTerm> = args
                        .iter()
                        .map(|a| match a {
                            Op::Tree(t) => Ok(&**t),
                            _ => Err(OperadError::ForeignOp("free operad argument".into())),
                        })
                        .collect::<Result<_, _>>()?;
                    let mut idx = 0;
                    let grafted = graft_at_leaves(t, &arg_terms, &mut idx);
                    Ok(Op::Tree(Box::new(grafted)))
                }
                _ => Err(OperadError::ForeignOp("free operad host".into())),
            },
            OperadKind::Bd(inner) => match b {
                Op::Tree(t) => {
                    let arg_terms: Vec<&TreeTerm> = args
                        .iter()
                        .map(|a| match a {
                            Op::Tree(t) => Ok(&**t),
                            _ => Err(OperadError::ForeignOp("derived operad argument".into())),
                        })
                        .collect::<Result<_, _>>()?;
                    let mut idx = 0;
                    let glued = substitute_at_nodes(inner, t, &arg_terms, &mut idx)?;
                    Ok(Op::Tree(Box::new(glued)))
                }
                _ => Err(OperadError::ForeignOp("derived operad host".into())),
            },
        }
    }

    /// Operations with the given output colour and arity at most
    /// `max_arity`, in deterministic order. Errors when the family is
    /// infinite even under the arity bound.
    pub fn ops_with_output(&self, colour: &Colour, max_arity: usize) -> Result<Vec<Op>, OperadError> {
        match self.kind() {
            OperadKind::Identity => Ok(if max_arity >= 1 { vec![Op::Unary] } else { vec![] }),
            OperadKind::FreeMonoid => Ok((0..=max_arity as u32).map(Op::Arity).collect()),
            OperadKind::Terminal { reduced } => {
                let lo = if *reduced { 1 } else { 0 };
                Ok((lo..=max_arity as u32).map(Op::Arity).collect())
            }
            OperadKind::Monoid(m) => Ok(if max_arity >= 1 {
                (0..m.names.len() as u32).map(Op::MElem).collect()
            } else {
                vec![]
            }),
            OperadKind::Poset(p) => {
                let Colour::Elem(b) = colour else {
                    return Err(OperadError::ColourMismatch("poset colour expected".into()));
                };
                Ok(if max_arity >= 1 {
                    p.le
                        .iter()
                        .filter(|(_, bb)| *bb == *b as usize)
                        .map(|(a, bb)| Op::PPair(*a as u32, *bb as u32))
                        .collect()
                } else {
                    vec![]
                })
            }
            OperadKind::Free(sig) => {
                if sig.ops.iter().any(|o| o.ins.len() <= 1) {
                    return Err(OperadError::InfiniteOpFamily(
                        "signature has operations of arity <= 1, so arbitrarily large trees share an arity"
                            .into(),
                    ));
                }
                // every node has >= 2 children, so trees with <= max_arity
                // leaves have < max_arity nodes
                let mut out = Vec::new();
                let mut seen = std::collections::BTreeSet::new();
                enumerate_sig_trees(sig, colour, max_arity, &mut |t| {
                    if seen.insert(t.key_string()) {
                        out.push(Op::Tree(Box::new(t)));
                    }
                });
                out.sort_by(|a, b| a.token().cmp(&b.token()));
                Ok(out)
            }
            OperadKind::Bd(inner) => {
                let Colour::OpCol(b) = colour else {
                    return Err(OperadError::ColourMismatch(
                        "derived-operad colour expected".into(),
                    ));
                };
                let all = inner.finite_ops().ok_or_else(|| {
                    OperadError::InfiniteOpFamily(
                        "inner operad has infinitely many operations".into(),
                    )
                })?;
                // operations are inner trees with at most max_arity nodes
                // whose residue is the requested colour
                let mut by_size: Vec<Vec<TreeTerm>> = vec![inner
                    .colours()?
                    .into_iter()
                    .map(TreeTerm::Trivial)
                    .collect()];
                for size in 1..=max_arity {
                    let mut seen = std::collections::BTreeSet::new();
                    let mut bucket = Vec::new();
                    for op in &all {
                        let in_cols = inner.input_colours(op);
                        for budgets in weak_compositions(size - 1, in_cols.len()) {
                            let choices: Vec<Vec<&TreeTerm>> = in_cols
                                .iter()
                                .zip(&budgets)
                                .map(|(c, sz)| {
                                    by_size[*sz].iter().filter(|t| t.colour() == c).collect()
                                })
                                .collect();
                            for_each_product(&choices, &mut |children| {
                                let mut children = children.to_vec();
                                if !inner.planar() {
                                    children
                                        .sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                                }
                                let t = TreeTerm::Node {
                                    op: op.clone(),
                                    colour: inner.output_colour(op),
                                    children,
                                };
                                if seen.insert(t.key_string()) {
                                    bucket.push(t);
                                }
                            });
                        }
                    }
                    by_size.push(bucket);
                }
                let mut out = Vec::new();
                for t in by_size.into_iter().flatten() {
                    if residue_term(inner, &t)? == **b {
                        out.push(Op::Tree(Box::new(t)));
                    }
                }
                out.sort_by(|a, b| a.token().cmp(&b.token()));
                Ok(out)
            }
        }
    }

    /// Human-readable operation label for printing and parsing.
    pub fn op_label(&self, op: &Op) -> String {
        match (self.kind(), op) {
            (OperadKind::Monoid(m), Op::MElem(i)) => m.names[*i as usize].clone(),
            (OperadKind::Poset(p), Op::PPair(a, b)) => {
                format!("{}<{}", p.names[*a as usize], p.names[*b as usize])
            }
            (OperadKind::Free(sig), Op::SigOp(i)) => sig.ops[*i as usize].name.clone(),
            (_, Op::Arity(n)) => n.to_string(),
            (_, Op::Unary) => "u".into(),
            _ => op.token(),
        }
    }

    pub fn colour_label(&self, colour: &Colour) -> String {
        match (self.kind(), colour) {
            (OperadKind::Poset(p), Colour::Elem(i)) => p.names[*i as usize].clone(),
            (OperadKind::Free(sig), Colour::Elem(i)) => sig.colour_names[*i as usize].clone(),
            (_, Colour::Unit) => "_".into(),
            _ => colour.token(),
        }
    }

    pub fn colour_by_label(&self, label: &str) -> Result<Colour, OperadError> {
        match self.kind() {
            OperadKind::Poset(p) => p
                .names
                .iter()
                .position(|n| n == label)
                .map(|i| Colour::Elem(i as u32))
                .ok_or_else(|| OperadError::UnknownLabel(label.into())),
            OperadKind::Free(sig) => sig
                .colour_names
                .iter()
                .position(|n| n == label)
                .map(|i| Colour::Elem(i as u32))
                .ok_or_else(|| OperadError::UnknownLabel(label.into())),
            _ => {
                if label == "_" {
                    Ok(Colour::Unit)
                } else {
                    Err(OperadError::UnknownLabel(label.into()))
                }
            }
        }
    }
}

/// Weak compositions of `total` into `parts` nonnegative summands.
pub(crate) fn weak_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in weak_compositions(total - first, parts - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Calls `f` on every element of the cartesian product of the choice lists.
pub(crate) fn for_each_product<T: Clone>(choices: &[Vec<&T>], f: &mut dyn FnMut(&[T])) {
    if choices.iter().any(|c| c.is_empty()) {
        return;
    }
    let mut pick = vec![0usize; choices.len()];
    loop {
        let current: Vec<T> = pick
            .iter()
            .enumerate()
            .map(|(i, p)| choices[i][*p].clone())
            .collect();
        f(&current);
        let mut i = 0;
        loop {
            if i == pick.len() {
                return;
            }
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

fn collect_leaf_colours(t: &TreeTerm, out: &mut Vec<Colour>) {
    match t {
        TreeTerm::Trivial(c) => out.push(c.clone()),
        TreeTerm::Node { children, .. } => {
            for c in children {
                collect_leaf_colours(c, out);
            }
        }
    }
}

fn collect_node_ops(t: &TreeTerm, f: &mut dyn FnMut(&Op)) {
    if let TreeTerm::Node { op, children, .. } = t {
        f(op);
        for c in children {
            collect_node_ops(c, f);
        }
    }
}

fn graft_at_leaves(t: &TreeTerm, args: &[&TreeTerm], idx: &mut usize) -> TreeTerm {
    match t {
        TreeTerm::Trivial(_) => {
            let r = args[*idx].clone();
            *idx += 1;
            r
        }
        TreeTerm::Node { op, colour, children } => TreeTerm::Node {
            op: op.clone(),
            colour: colour.clone(),
            children: children
                .iter()
                .map(|c| graft_at_leaves(c, args, idx))
                .collect(),
        },
    }
}

/// Substitutes argument trees into the nodes of `t` (preorder), grafting
/// each argument's leaves onto the glued child trees. Fails when an
/// argument's residue does not match the node it replaces.
fn substitute_at_nodes(
    inner: &Operad,
    t: &TreeTerm,
    args: &[&TreeTerm],
    idx: &mut usize,
) -> Result<TreeTerm, OperadError> {
    match t {
        TreeTerm::Trivial(c) => Ok(TreeTerm::Trivial(c.clone())),
        TreeTerm::Node { op, children, .. } => {
            let replacement = args[*idx].clone();
            *idx += 1;
            if &residue_term(inner, &replacement)? != op {
                return Err(OperadError::ColourMismatch(format!(
                    "substituted tree has residue {:?}, node expects {:?}",
                    residue_term(inner, &replacement),
                    op
                )));
            }
            let glued_children: Vec<TreeTerm> = children
                .iter()
                .map(|c| substitute_at_nodes(inner, c, args, idx))
                .collect::<Result<_, _>>()?;
            let mut leaf_idx = 0;
            Ok(replace_leaves(inner, &replacement, &glued_children, &mut leaf_idx))
        }
    }
}

fn replace_leaves(
    inner: &Operad,
    t: &TreeTerm,
    subs: &[TreeTerm],
    idx: &mut usize,
) -> TreeTerm {
    match t {
        TreeTerm::Trivial(_) => {
            let r = subs[*idx].clone();
            *idx += 1;
            r
        }
        TreeTerm::Node { op, colour, children } => {
            let mut mapped: Vec<TreeTerm> = children
                .iter()
                .map(|c| replace_leaves(inner, c, subs, idx))
                .collect();
            if !inner.planar() {
                mapped.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
            }
            TreeTerm::Node {
                op: op.clone(),
                colour: colour.clone(),
                children: mapped,
            }
        }
    }
}

fn enumerate_sig_trees(
    sig: &Signature,
    colour: &Colour,
    max_leaves: usize,
    emit: &mut dyn FnMut(TreeTerm),
) {
    // trees over a signature whose operations all have arity >= 2
    fn gen(sig: &Signature, colour: &Colour, max_leaves: usize) -> Vec<TreeTerm> {
        let mut out = vec![TreeTerm::Trivial(colour.clone())];
        if max_leaves < 2 {
            return out;
        }
        for (i, decl) in sig.ops.iter().enumerate() {
            if Colour::Elem(decl.out as u32) != *colour || decl.ins.len() > max_leaves {
                continue;
            }
            // distribute the leaf budget over the children
            let k = decl.ins.len();
            let mut budgets = vec![1usize; k];
            loop {
                if budgets.iter().sum::<usize>() <= max_leaves {
                    let child_sets: Vec<Vec<TreeTerm>> = decl
                        .ins
                        .iter()
                        .zip(&budgets)
                        .map(|(c, b)| gen(sig, &Colour::Elem(*c as u32), *b))
                        .collect();
                    let mut pick = vec![0usize; k];
                    loop {
                        let children: Vec<TreeTerm> = pick
                            .iter()
                            .enumerate()
                            .map(|(j, p)| child_sets[j][*p].clone())
                            .collect();
                        let leaves: usize = children.iter().map(|c| c.leaf_count()).sum();
                        if leaves <= max_leaves {
                            out.push(TreeTerm::Node {
                                op: Op::SigOp(i as u32),
                                colour: colour.clone(),
                                children,
                            });
                        }
                        let mut j = 0;
                        loop {
                            if j == k {
                                break;
                            }
                            pick[j] += 1;
                            if pick[j] < child_sets[j].len() {
                                break;
                            }
                            pick[j] = 0;
                            j += 1;
                        }
                        if j == k {
                            break;
                        }
                    }
                }
                let mut j = 0;
                loop {
                    if j == k {
                        break;
                    }
                    budgets[j] += 1;
                    if budgets[j] <= max_leaves {
                        break;
                    }
                    budgets[j] = 1;
                    j += 1;
                }
                if j == k {
                    break;
                }
            }
        }
        out
    }
    for t in gen(sig, colour, max_leaves) {
        emit(t);
    }
}

/// Checked operad composition: validates arity and colour compatibility
/// before delegating to the composition oracle.
pub fn op_compose(operad: &Operad, b: &Op, args: &[Op]) -> Result<Op, OperadError> {
    let expected = operad.arity(b);
    if args.len() != expected {
        return Err(OperadError::ArityMismatch {
            expected,
            got: args.len(),
        });
    }
    let in_cols = operad.input_colours(b);
    for (i, a) in args.iter().enumerate() {
        if operad.output_colour(a) != in_cols[i] {
            return Err(OperadError::ColourMismatch(format!(
                "argument {i} has output colour {:?}, slot expects {:?}",
                operad.output_colour(a),
                in_cols[i]
            )));
        }
    }
    operad.compose(b, args)
}

/// Residue of a canonical term: the fold of the composition oracle.
pub fn residue_term(operad: &Operad, term: &TreeTerm) -> Result<Op, OperadError> {
    match term {
        TreeTerm::Trivial(c) => Ok(operad.unit(c)),
        TreeTerm::Node { op, children, .. } => {
            let args: Vec<Op> = children
                .iter()
                .map(|c| residue_term(operad, c))
                .collect::<Result<_, _>>()?;
            op_compose(operad, op, &args)
        }
    }
}

/// Folds a whole decorated tree to a single operation with the same arity
/// and boundary colours.
pub fn residue(operad: &Operad, t: &PTree) -> Result<Op, OperadError> {
    residue_term(operad, &t.canonical_term())
}

// ---------------------------------------------------------------------------
// JSON file formats
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct MonoidFile {
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct PosetFile {
    elements: Vec<String>,
    le: Vec<(String, String)>,
}

#[derive(Deserialize)]
struct SignatureFile {
    colours: Vec<String>,
    ops: Vec<SignatureFileOp>,
}

#[derive(Deserialize)]
struct SignatureFileOp {
    name: String,
    out: String,
    #[serde(rename = "in")]
    ins: Vec<String>,
}

/// Parses `{"elements":[...], "table":[[...]]}` where row `i`, column `j`
/// holds the index of the product of elements `i` and `j`.
pub fn monoid_from_json(text: &str) -> Result<OperadDescriptor, OperadError> {
    let f: MonoidFile =
        serde_json::from_str(text).map_err(|e| OperadError::MalformedTable(e.to_string()))?;
    Ok(OperadDescriptor::Monoid(f.elements, f.table))
}

/// Parses `{"elements":[...], "le":[[a,b],...]}` with the relation given
/// reflexive-transitively closed over element names.
pub fn poset_from_json(text: &str) -> Result<OperadDescriptor, OperadError> {
    let f: PosetFile =
        serde_json::from_str(text).map_err(|e| OperadError::MalformedTable(e.to_string()))?;
    let index = |name: &str| {
        f.elements
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| OperadError::UnknownLabel(name.into()))
    };
    let mut le = Vec::new();
    for (a, b) in &f.le {
        le.push((index(a)?, index(b)?));
    }
    Ok(OperadDescriptor::Poset(f.elements, le))
}

/// Parses `{"colours":[...], "ops":[{"name":..,"out":..,"in":[..]}]}`.
pub fn signature_from_json(text: &str) -> Result<OperadDescriptor, OperadError> {
    let f: SignatureFile =
        serde_json::from_str(text).map_err(|e| OperadError::MalformedTable(e.to_string()))?;
    let index = |name: &str| {
        f.colours
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| OperadError::UnknownLabel(name.into()))
    };
    let mut ops = Vec::new();
    for o in &f.ops {
        ops.push(SigDecl {
            name: o.name.clone(),
            out: index(&o.out)?,
            ins: o.ins.iter().map(|i| index(i)).collect::<Result<_, _>>()?,
        });
    }
    Ok(OperadDescriptor::Free(Signature {
        colour_names: f.colours,
        ops,
    }))
}

impl fmt::Display for Operad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            OperadKind::Identity => write!(f, "id"),
            OperadKind::FreeMonoid => write!(f, "freemonoid"),
            OperadKind::Terminal { reduced: false } => write!(f, "terminal"),
            OperadKind::Terminal { reduced: true } => write!(f, "terminal-reduced"),
            OperadKind::Monoid(m) => write!(f, "monoid({})", m.names.join(",")),
            OperadKind::Poset(p) => write!(f, "poset({})", p.names.join(",")),
            OperadKind::Free(s) => write!(f, "free({} ops)", s.ops.len()),
            OperadKind::Bd(inner) => write!(f, "bd({inner})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::linear_ptree;

    #[test]
    fn identity_has_one_unary_op() {
        let op = make_operad(OperadDescriptor::Identity).unwrap();
        assert_eq!(op.colours().unwrap().len(), 1);
        assert_eq!(op.ops_with_output(&Colour::Unit, 3).unwrap(), vec![Op::Unary]);
        assert_eq!(op.arity(&Op::Unary), 1);
    }

    #[test]
    fn monoid_z3_composition() {
        let z3 = make_operad(OperadDescriptor::Monoid(
            MonoidTable::cyclic(3).names,
            MonoidTable::cyclic(3).table,
        ))
        .unwrap();
        let got = op_compose(&z3, &Op::MElem(1), &[Op::MElem(2)]).unwrap();
        assert_eq!(got, Op::MElem(0));
    }

    #[test]
    fn non_associative_table_rejected() {
        // a 2x2 table with no structure
        let r = MonoidTable::new(vec!["x".into(), "y".into()], vec![vec![1, 1], vec![0, 1]]);
        assert!(matches!(r, Err(OperadError::MalformedTable(_))));
    }

    #[test]
    fn non_transitive_poset_rejected() {
        let r = PosetRel::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)],
        );
        assert!(matches!(r, Err(OperadError::MalformedTable(_))));
    }

    #[test]
    fn terminal_compose_adds_arities() {
        let t = make_operad(OperadDescriptor::Terminal).unwrap();
        let got = op_compose(&t, &Op::Arity(3), &[Op::Arity(2), Op::Arity(0), Op::Arity(1)]).unwrap();
        assert_eq!(got, Op::Arity(3));
        assert_eq!(t.arity(&got), 3);
    }

    #[test]
    fn arity_mismatch_reported() {
        let t = make_operad(OperadDescriptor::Terminal).unwrap();
        assert!(matches!(
            op_compose(&t, &Op::Arity(2), &[Op::Arity(1)]),
            Err(OperadError::ArityMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn residue_of_word_tree() {
        let z3 = make_operad(OperadDescriptor::Monoid(
            MonoidTable::cyclic(3).names,
            MonoidTable::cyclic(3).table,
        ))
        .unwrap();
        let t = linear_ptree(&z3, Colour::Unit, &[Op::MElem(1), Op::MElem(2)]);
        assert_eq!(residue(&z3, &t).unwrap(), Op::MElem(0));
    }

    #[test]
    fn residue_of_trivial_is_unit() {
        let p = make_operad(OperadDescriptor::Poset(
            PosetRel::chain(4).names,
            PosetRel::chain(4).le,
        ))
        .unwrap();
        let t = PTree::trivial(&p, Colour::Elem(2));
        assert_eq!(residue(&p, &t).unwrap(), Op::PPair(2, 2));
    }

    #[test]
    fn residue_counts_leaves_over_terminal() {
        use crate::trees::TreeTerm;
        let term = TreeTerm::Node {
            op: Op::Arity(3),
            colour: Colour::Unit,
            children: vec![
                TreeTerm::Node {
                    op: Op::Arity(2),
                    colour: Colour::Unit,
                    children: vec![TreeTerm::Trivial(Colour::Unit); 2],
                },
                TreeTerm::Trivial(Colour::Unit),
                TreeTerm::Node {
                    op: Op::Arity(2),
                    colour: Colour::Unit,
                    children: vec![TreeTerm::Trivial(Colour::Unit); 2],
                },
            ],
        };
        let t = make_operad(OperadDescriptor::Terminal).unwrap();
        let tree = term.to_ptree(&t);
        assert_eq!(residue(&t, &tree).unwrap(), Op::Arity(5));
    }

    #[test]
    fn bd_identity_ops_are_linear_trees() {
        let bd = make_operad(OperadDescriptor::Bd(Box::new(OperadDescriptor::Identity))).unwrap();
        let cols = bd.colours().unwrap();
        assert_eq!(cols.len(), 1);
        for k in 0..=4usize {
            let ops = bd.ops_with_output(&cols[0], k).unwrap();
            // one linear tree for each node count 0..=k
            assert_eq!(ops.len(), k + 1);
        }
    }

    #[test]
    fn bd_substitution_glues_linear_trees() {
        let bd = make_operad(OperadDescriptor::Bd(Box::new(OperadDescriptor::Identity))).unwrap();
        let col = &bd.colours().unwrap()[0];
        let ell = |k: usize| {
            bd.ops_with_output(col, 4)
                .unwrap()
                .into_iter()
                .find(|o| bd.arity(o) == k)
                .unwrap()
        };
        // substitute l3 and l1 into the two nodes of l2, obtaining l4
        let got = op_compose(&bd, &ell(2), &[ell(3), ell(1)]).unwrap();
        assert_eq!(got, ell(4));
        assert_eq!(bd.arity(&got), 4);
    }

    #[test]
    fn units_are_neutral() {
        let ops: Vec<Operad> = vec![
            make_operad(OperadDescriptor::Identity).unwrap(),
            make_operad(OperadDescriptor::FreeMonoid).unwrap(),
            make_operad(OperadDescriptor::Terminal).unwrap(),
            make_operad(OperadDescriptor::Monoid(
                MonoidTable::cyclic(2).names,
                MonoidTable::cyclic(2).table,
            ))
            .unwrap(),
        ];
        for op in &ops {
            for b in op.ops_with_output(&Colour::Unit, 3).unwrap() {
                let units: Vec<Op> = op
                    .input_colours(&b)
                    .iter()
                    .map(|c| op.unit(c))
                    .collect();
                assert_eq!(op_compose(op, &b, &units).unwrap(), b, "right unit law");
                let outer = op.unit(&op.output_colour(&b));
                assert_eq!(
                    op_compose(op, &outer, &[b.clone()]).unwrap(),
                    b,
                    "left unit law"
                );
            }
        }
    }

    #[test]
    fn compose_is_associative_on_samples() {
        let t = make_operad(OperadDescriptor::Terminal).unwrap();
        // ((b . a) . c) == (b . (a . c)) via arity bookkeeping
        let b = Op::Arity(2);
        let a1 = Op::Arity(1);
        let a2 = Op::Arity(2);
        let inner = op_compose(&t, &b, &[a1.clone(), a2.clone()]).unwrap();
        let c: Vec<Op> = vec![Op::Arity(0), Op::Arity(3), Op::Arity(1)];
        let lhs = op_compose(&t, &inner, &c).unwrap();
        let r1 = op_compose(&t, &a1, &[c[0].clone()]).unwrap();
        let r2 = op_compose(&t, &a2, &[c[1].clone(), c[2].clone()]).unwrap();
        let rhs = op_compose(&t, &b, &[r1, r2]).unwrap();
        assert_eq!(lhs, rhs);
    }
}
