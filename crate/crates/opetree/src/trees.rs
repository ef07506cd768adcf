//! Rooted operadic trees in the polynomial presentation.
//!
//! A tree is a diagram of finite sets `A <- M -> N -> A` where `A` is the
//! edge set, `N` the node set, and the two maps out of `M` record which
//! edges are inputs of which nodes. Edges are open-ended: the root edge
//! hangs below the root node and leaf edges hang above the top nodes. The
//! trivial tree has one edge and no nodes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::operads::{Colour, Op, Operad};

/// Identifier of an edge within one tree. Identities are local and carry no
/// meaning across trees; iso-classes live in [`CanonicalKey`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct EdgeId(pub u32);

/// Identifier of a node within one tree.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub u32);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Raw candidate data for a tree, prior to validation.
#[derive(Clone, Debug, Default)]
pub struct TreeData {
    pub edges: Vec<EdgeId>,
    pub nodes: Vec<NodeId>,
    pub root: EdgeId,
    /// The map `t`: each node's output edge.
    pub output: BTreeMap<NodeId, EdgeId>,
    /// The map `s` fibered by `p`: each node's ordered input edges.
    pub inputs: BTreeMap<NodeId, Vec<EdgeId>>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("axiom 1 violated: edge {0} is the output of more than one node")]
    Axiom1Violation(EdgeId),
    #[error("axiom 2 violated: edge {0} is consumed {1} times (expected {2})")]
    Axiom2Violation(EdgeId, usize, usize),
    #[error("axiom 3 violated: walk to root from edge {0} does not terminate")]
    Axiom3Violation(EdgeId),
    #[error("inconsistent identifier references: {0}")]
    BadReference(String),
}

/// A validated tree. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    edges: Vec<EdgeId>,
    nodes: Vec<NodeId>,
    root: EdgeId,
    output: BTreeMap<NodeId, EdgeId>,
    inputs: BTreeMap<NodeId, Vec<EdgeId>>,
    // derived
    producer: BTreeMap<EdgeId, NodeId>, // node whose output is the edge
    consumer: BTreeMap<EdgeId, NodeId>, // node having the edge among its inputs
}

/// Checks the three tree axioms on raw data.
pub fn validate_tree(raw: TreeData) -> Result<Tree, TreeError> {
    let edge_set: BTreeSet<EdgeId> = raw.edges.iter().copied().collect();
    let node_set: BTreeSet<NodeId> = raw.nodes.iter().copied().collect();
    if edge_set.len() != raw.edges.len() {
        return Err(TreeError::BadReference("duplicate edge id".into()));
    }
    if node_set.len() != raw.nodes.len() {
        return Err(TreeError::BadReference("duplicate node id".into()));
    }
    if !edge_set.contains(&raw.root) {
        return Err(TreeError::BadReference(format!(
            "root {} not among edges",
            raw.root
        )));
    }
    for n in &raw.nodes {
        if !raw.output.contains_key(n) {
            return Err(TreeError::BadReference(format!("node {n} has no output")));
        }
        if !raw.inputs.contains_key(n) {
            return Err(TreeError::BadReference(format!(
                "node {n} has no input list"
            )));
        }
    }
    for (n, e) in &raw.output {
        if !node_set.contains(n) || !edge_set.contains(e) {
            return Err(TreeError::BadReference(format!("output map entry {n}->{e}")));
        }
    }
    for (n, es) in &raw.inputs {
        if !node_set.contains(n) {
            return Err(TreeError::BadReference(format!("input map entry for {n}")));
        }
        for e in es {
            if !edge_set.contains(e) {
                return Err(TreeError::BadReference(format!("input edge {e} of {n}")));
            }
        }
    }

    // Axiom 1: t injective.
    let mut producer = BTreeMap::new();
    for (n, e) in &raw.output {
        if producer.insert(*e, *n).is_some() {
            return Err(TreeError::Axiom1Violation(*e));
        }
    }

    // Axiom 2: every edge except the root is the input of exactly one node.
    let mut consumed: BTreeMap<EdgeId, usize> = BTreeMap::new();
    let mut consumer = BTreeMap::new();
    for (n, es) in &raw.inputs {
        for e in es {
            *consumed.entry(*e).or_insert(0) += 1;
            consumer.insert(*e, *n);
        }
    }
    for e in &raw.edges {
        let count = consumed.get(e).copied().unwrap_or(0);
        let expected = if *e == raw.root { 0 } else { 1 };
        if count != expected {
            return Err(TreeError::Axiom2Violation(*e, count, expected));
        }
    }

    // Axiom 3: sigma reaches the root from every edge within #edges steps.
    let bound = raw.edges.len();
    for e in &raw.edges {
        let mut cur = *e;
        let mut steps = 0;
        while cur != raw.root {
            match consumer.get(&cur) {
                Some(n) => cur = raw.output[n],
                None => return Err(TreeError::Axiom3Violation(*e)),
            }
            steps += 1;
            if steps > bound {
                return Err(TreeError::Axiom3Violation(*e));
            }
        }
    }

    Ok(Tree {
        edges: raw.edges,
        nodes: raw.nodes,
        root: raw.root,
        output: raw.output,
        inputs: raw.inputs,
        producer,
        consumer,
    })
}

impl Tree {
    /// The trivial tree: a single edge, no nodes.
    pub fn trivial() -> Tree {
        validate_tree(TreeData {
            edges: vec![EdgeId(0)],
            nodes: vec![],
            root: EdgeId(0),
            output: BTreeMap::new(),
            inputs: BTreeMap::new(),
        })
        .expect("trivial tree is valid")
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn root(&self) -> EdgeId {
        self.root
    }

    pub fn output(&self, n: NodeId) -> EdgeId {
        self.output[&n]
    }

    pub fn inputs(&self, n: NodeId) -> &[EdgeId] {
        &self.inputs[&n]
    }

    /// Node producing the edge (the node whose output it is), if any.
    pub fn producer(&self, e: EdgeId) -> Option<NodeId> {
        self.producer.get(&e).copied()
    }

    /// Node consuming the edge (having it among its inputs), if any.
    pub fn consumer(&self, e: EdgeId) -> Option<NodeId> {
        self.consumer.get(&e).copied()
    }

    /// One application of the walk-to-root function sigma.
    pub fn sigma(&self, e: EdgeId) -> EdgeId {
        match self.consumer.get(&e) {
            Some(n) => self.output[n],
            None => self.root,
        }
    }

    /// Height of an edge: number of sigma steps to reach the root.
    pub fn height(&self, e: EdgeId) -> usize {
        let mut cur = e;
        let mut h = 0;
        while cur != self.root {
            cur = self.sigma(cur);
            h += 1;
        }
        h
    }

    pub fn is_leaf(&self, e: EdgeId) -> bool {
        !self.producer.contains_key(&e)
    }

    /// Edges that are neither the root nor a leaf.
    pub fn inner_edges(&self) -> Vec<EdgeId> {
        self.edges
            .iter()
            .copied()
            .filter(|e| *e != self.root && !self.is_leaf(*e))
            .collect()
    }

    /// Node count. The trivial tree has zero.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Depth-first traversal of edges from the root, children in slot order.
    pub fn traversal_edges(&self) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(self.edges.len());
        let mut stack = vec![self.root];
        while let Some(e) = stack.pop() {
            out.push(e);
            if let Some(n) = self.producer(e) {
                for inp in self.inputs[&n].iter().rev() {
                    stack.push(*inp);
                }
            }
        }
        out
    }

    /// Nodes in depth-first order from the root node.
    pub fn traversal_nodes(&self) -> Vec<NodeId> {
        self.traversal_edges()
            .into_iter()
            .filter_map(|e| self.producer(e))
            .collect()
    }

    /// All leaves are at height exactly `n` and no edge exceeds it.
    pub fn is_n_level(&self, n: usize) -> bool {
        self.edges.iter().all(|e| self.height(*e) <= n)
            && self
                .edges
                .iter()
                .filter(|e| self.is_leaf(**e))
                .all(|e| self.height(*e) == n)
    }
}

/// Leaves in canonical traversal order: the edges outside the image of the
/// output map.
pub fn leaves(t: &Tree) -> Vec<EdgeId> {
    t.traversal_edges()
        .into_iter()
        .filter(|e| t.is_leaf(*e))
        .collect()
}

/// A tree decorated over an operad: nodes carry operations, edges carry
/// colours, compatibly (the pullback condition).
#[derive(Clone, Debug)]
pub struct PTree {
    tree: Tree,
    operad: Operad,
    node_dec: BTreeMap<NodeId, Op>,
    edge_dec: BTreeMap<EdgeId, Colour>,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DecorateError {
    #[error("arity mismatch at node {node}: operation has arity {op_arity}, node has {slots} input edges")]
    ArityMismatch {
        node: NodeId,
        op_arity: usize,
        slots: usize,
    },
    #[error("colour mismatch at {0}")]
    ColourMismatch(String),
    #[error("missing decoration for {0}")]
    MissingDecoration(String),
}

/// Decorates a validated tree, checking arity and colour compatibility.
pub fn decorate(
    tree: Tree,
    node_dec: BTreeMap<NodeId, Op>,
    edge_dec: BTreeMap<EdgeId, Colour>,
    operad: &Operad,
) -> Result<PTree, DecorateError> {
    for e in tree.edges() {
        if !edge_dec.contains_key(e) {
            return Err(DecorateError::MissingDecoration(format!("edge {e}")));
        }
    }
    for n in tree.nodes() {
        let op = node_dec
            .get(n)
            .ok_or_else(|| DecorateError::MissingDecoration(format!("node {n}")))?;
        let slots = tree.inputs(*n).len();
        let arity = operad.arity(op);
        if arity != slots {
            return Err(DecorateError::ArityMismatch {
                node: *n,
                op_arity: arity,
                slots,
            });
        }
        let out_col = operad.output_colour(op);
        if edge_dec[&tree.output(*n)] != out_col {
            return Err(DecorateError::ColourMismatch(format!(
                "node {n}: output edge colour differs from operation output colour"
            )));
        }
        let in_cols = operad.input_colours(op);
        for (i, e) in tree.inputs(*n).iter().enumerate() {
            if edge_dec[e] != in_cols[i] {
                return Err(DecorateError::ColourMismatch(format!(
                    "node {n}: input slot {i} colour differs from edge {e} colour"
                )));
            }
        }
    }
    Ok(PTree {
        tree,
        operad: operad.clone(),
        node_dec,
        edge_dec,
    })
}

impl PTree {
    /// The trivial tree of the given colour.
    pub fn trivial(operad: &Operad, colour: Colour) -> PTree {
        let tree = Tree::trivial();
        let mut edge_dec = BTreeMap::new();
        edge_dec.insert(tree.root(), colour);
        PTree {
            tree,
            operad: operad.clone(),
            node_dec: BTreeMap::new(),
            edge_dec,
        }
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn operad(&self) -> &Operad {
        &self.operad
    }

    pub fn node_op(&self, n: NodeId) -> &Op {
        &self.node_dec[&n]
    }

    pub fn edge_colour(&self, e: EdgeId) -> &Colour {
        &self.edge_dec[&e]
    }

    pub fn root_colour(&self) -> &Colour {
        self.edge_colour(self.tree.root())
    }

    pub fn is_trivial(&self) -> bool {
        self.tree.node_count() == 0
    }

    /// Canonical term of the full subtree sitting above an edge.
    pub fn term_above(&self, e: EdgeId) -> TreeTerm {
        match self.tree.producer(e) {
            None => TreeTerm::Trivial(self.edge_colour(e).clone()),
            Some(n) => {
                let mut children: Vec<TreeTerm> = self
                    .tree
                    .inputs(n)
                    .iter()
                    .map(|inp| self.term_above(*inp))
                    .collect();
                if !self.operad.planar() {
                    children.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                }
                TreeTerm::Node {
                    op: self.node_op(n).clone(),
                    colour: self.edge_colour(e).clone(),
                    children,
                }
            }
        }
    }

    pub fn canonical_term(&self) -> TreeTerm {
        self.term_above(self.tree.root())
    }
}

/// Canonical key of a decorated tree; equal keys correspond exactly to
/// isomorphic trees over the same operad.
pub fn canonical_key(t: &PTree) -> CanonicalKey {
    CanonicalKey::from_term(t.canonical_term())
}

/// Order of the automorphism group: per node, the product of factorials of
/// multiplicities of isomorphic child branches. Planar operads admit no
/// nontrivial symmetries.
pub fn aut_order(t: &PTree) -> u64 {
    if t.operad().planar() {
        return 1;
    }
    fn factorial(n: u64) -> u64 {
        (1..=n).product::<u64>().max(1)
    }
    fn go(term: &TreeTerm) -> u64 {
        match term {
            TreeTerm::Trivial(_) => 1,
            TreeTerm::Node { children, .. } => {
                let mut total: u64 = children.iter().map(go).product();
                let mut i = 0;
                while i < children.len() {
                    let mut j = i + 1;
                    while j < children.len() && children[j] == children[i] {
                        j += 1;
                    }
                    total *= factorial((j - i) as u64);
                    i = j;
                }
                total
            }
        }
    }
    // canonical_term sorts children, so equal branches are adjacent
    go(&t.canonical_term())
}

/// Canonical form of a decorated tree as a recursive term. Children of a
/// node are listed in slot order for planar operads and sorted by key
/// otherwise.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TreeTerm {
    Trivial(Colour),
    Node {
        op: Op,
        colour: Colour,
        children: Vec<TreeTerm>,
    },
}

impl TreeTerm {
    pub fn colour(&self) -> &Colour {
        match self {
            TreeTerm::Trivial(c) => c,
            TreeTerm::Node { colour, .. } => colour,
        }
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, TreeTerm::Trivial(_))
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeTerm::Trivial(_) => 0,
            TreeTerm::Node { children, .. } => {
                1 + children.iter().map(TreeTerm::node_count).sum::<usize>()
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeTerm::Trivial(_) => 1,
            TreeTerm::Node { children, .. } => {
                children.iter().map(TreeTerm::leaf_count).sum::<usize>().max(0)
            }
        }
    }

    /// One-node corolla test.
    pub fn is_corolla(&self) -> bool {
        match self {
            TreeTerm::Trivial(_) => false,
            TreeTerm::Node { children, .. } => children.iter().all(TreeTerm::is_trivial),
        }
    }

    /// Deterministic prefix encoding over (operation, colour, child keys).
    pub fn key_string(&self) -> String {
        let mut s = String::new();
        self.write_key(&mut s);
        s
    }

    fn write_key(&self, out: &mut String) {
        match self {
            TreeTerm::Trivial(c) => {
                out.push('|');
                out.push_str(&c.token());
            }
            TreeTerm::Node { op, children, .. } => {
                out.push_str(&op.token());
                out.push('(');
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    c.write_key(out);
                }
                out.push(')');
            }
        }
    }

    /// Rebuilds a concrete representative with fresh identifiers.
    pub fn to_ptree(&self, operad: &Operad) -> PTree {
        let mut data = TreeData::default();
        let mut node_dec = BTreeMap::new();
        let mut edge_dec = BTreeMap::new();
        let mut next_edge = 0u32;
        let mut next_node = 0u32;
        fn build(
            term: &TreeTerm,
            below: EdgeId,
            data: &mut TreeData,
            node_dec: &mut BTreeMap<NodeId, Op>,
            edge_dec: &mut BTreeMap<EdgeId, Colour>,
            next_edge: &mut u32,
            next_node: &mut u32,
        ) {
            edge_dec.insert(below, term.colour().clone());
            if let TreeTerm::Node { op, children, .. } = term {
                let n = NodeId(*next_node);
                *next_node += 1;
                data.nodes.push(n);
                data.output.insert(n, below);
                node_dec.insert(n, op.clone());
                let mut ins = Vec::with_capacity(children.len());
                for child in children {
                    let e = EdgeId(*next_edge);
                    *next_edge += 1;
                    data.edges.push(e);
                    ins.push(e);
                    build(child, e, data, node_dec, edge_dec, next_edge, next_node);
                }
                data.inputs.insert(n, ins);
            }
        }
        let root = EdgeId(next_edge);
        next_edge += 1;
        data.edges.push(root);
        data.root = root;
        build(
            self,
            root,
            &mut data,
            &mut node_dec,
            &mut edge_dec,
            &mut next_edge,
            &mut next_node,
        );
        let tree = validate_tree(data).expect("term expansion yields a valid tree");
        decorate(tree, node_dec, edge_dec, operad).expect("term expansion is well decorated")
    }

    /// Transports a term along maps of operations and colours, re-sorting
    /// children when the target convention differs.
    pub fn map_decorations(
        &self,
        op_map: &dyn Fn(&Op) -> Op,
        colour_map: &dyn Fn(&Colour) -> Colour,
        target_planar: bool,
    ) -> TreeTerm {
        match self {
            TreeTerm::Trivial(c) => TreeTerm::Trivial(colour_map(c)),
            TreeTerm::Node {
                op,
                colour,
                children,
            } => {
                let mut mapped: Vec<TreeTerm> = children
                    .iter()
                    .map(|c| c.map_decorations(op_map, colour_map, target_planar))
                    .collect();
                if !target_planar {
                    mapped.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                }
                TreeTerm::Node {
                    op: op_map(op),
                    colour: colour_map(colour),
                    children: mapped,
                }
            }
        }
    }
}

/// Iso-class token: a [`TreeTerm`] together with its prefix-string key.
/// Ordering, equality and hashing all use the key string.
#[derive(Clone, Debug)]
pub struct CanonicalKey {
    key: String,
    term: TreeTerm,
}

impl CanonicalKey {
    pub fn from_term(term: TreeTerm) -> CanonicalKey {
        CanonicalKey {
            key: term.key_string(),
            term,
        }
    }

    pub fn as_str(&self) -> &str {
        &self.key
    }

    pub fn term(&self) -> &TreeTerm {
        &self.term
    }
}

impl PartialEq for CanonicalKey {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for CanonicalKey {}

impl PartialOrd for CanonicalKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CanonicalKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

impl std::hash::Hash for CanonicalKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

/// Builds a linear tree with the given node operations, listed from the
/// leaf end to the root end. Edge colours are forced by the operations'
/// profiles; `top_colour` decorates the leaf edge.
pub fn linear_ptree(operad: &Operad, top_colour: Colour, ops_leaf_to_root: &[Op]) -> PTree {
    let mut term = TreeTerm::Trivial(top_colour);
    for op in ops_leaf_to_root {
        debug_assert_eq!(operad.arity(op), 1);
        term = TreeTerm::Node {
            op: op.clone(),
            colour: operad.output_colour(op),
            children: vec![term],
        };
    }
    term.to_ptree(operad)
}
