//! Enumeration and surgery on decorated trees: generating iso-classes,
//! layerings (tree cuts), blobbings (reduced covers), contraction of blobs
//! and the inverse gluing.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::operads::{
    for_each_product, op_compose, residue, weak_compositions, Colour, Op, Operad, OperadError,
};
use crate::trees::{CanonicalKey, EdgeId, NodeId, PTree, TreeTerm};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CombinatError {
    #[error("enumeration bounds exceed the colour domain: {0}")]
    BoundsTooLargeForColourDomain(String),
    #[error("the trivial tree has no blobbing")]
    TrivialTreeHasNoBlobbing,
    #[error("refinement residue does not match node decoration at {0}")]
    ResidueMismatch(String),
    #[error(transparent)]
    Operad(#[from] OperadError),
}

/// A commutative monomial of canonical trees. The empty forest is the unit.
#[derive(Clone, Debug)]
pub struct Forest {
    operad: Operad,
    trees: Vec<CanonicalKey>, // sorted
}

impl Forest {
    pub fn empty(operad: &Operad) -> Forest {
        Forest {
            operad: operad.clone(),
            trees: Vec::new(),
        }
    }

    pub fn single(operad: &Operad, key: CanonicalKey) -> Forest {
        Forest {
            operad: operad.clone(),
            trees: vec![key],
        }
    }

    pub fn from_keys(operad: &Operad, mut keys: Vec<CanonicalKey>) -> Forest {
        keys.sort();
        Forest {
            operad: operad.clone(),
            trees: keys,
        }
    }

    pub fn operad(&self) -> &Operad {
        &self.operad
    }

    pub fn trees(&self) -> &[CanonicalKey] {
        &self.trees
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(|k| k.term().node_count()).sum()
    }

    /// Multiset union with another forest over the same operad.
    pub fn union(&self, other: &Forest) -> Forest {
        debug_assert_eq!(self.operad, other.operad);
        let mut trees = self.trees.clone();
        trees.extend(other.trees.iter().cloned());
        trees.sort();
        Forest {
            operad: self.operad.clone(),
            trees,
        }
    }
}

impl PartialEq for Forest {
    fn eq(&self, other: &Self) -> bool {
        self.trees == other.trees
    }
}

impl Eq for Forest {}

impl PartialOrd for Forest {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Forest {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.trees.cmp(&other.trees)
    }
}

impl std::hash::Hash for Forest {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.trees.hash(state);
    }
}

/// All iso-classes of decorated trees with at most `max_nodes` nodes and
/// node arities at most `max_arity`, each exactly once, including the
/// trivial trees (one per colour). Deterministic (key-lexicographic) order.
pub fn enumerate_ptrees(
    operad: &Operad,
    max_nodes: usize,
    max_arity: usize,
) -> Result<Vec<CanonicalKey>, CombinatError> {
    let colours = operad
        .colours()
        .map_err(|e| CombinatError::BoundsTooLargeForColourDomain(e.to_string()))?;
    let mut seen: BTreeSet<CanonicalKey> = BTreeSet::new();
    // terms of each exact size per colour, built bottom-up
    let mut by_size: Vec<BTreeMap<Colour, Vec<TreeTerm>>> = Vec::with_capacity(max_nodes + 1);
    let mut level0 = BTreeMap::new();
    for c in &colours {
        level0.insert(c.clone(), vec![TreeTerm::Trivial(c.clone())]);
        seen.insert(CanonicalKey::from_term(TreeTerm::Trivial(c.clone())));
    }
    by_size.push(level0);
    for size in 1..=max_nodes {
        let mut level: BTreeMap<Colour, Vec<TreeTerm>> = BTreeMap::new();
        for c in &colours {
            let mut bucket: Vec<TreeTerm> = Vec::new();
            let mut local: BTreeSet<String> = BTreeSet::new();
            for op in operad
                .ops_with_output(c, max_arity)
                .map_err(|e| CombinatError::BoundsTooLargeForColourDomain(e.to_string()))?
            {
                let in_cols = operad.input_colours(&op);
                for budgets in weak_compositions(size - 1, in_cols.len()) {
                    let choices: Vec<Vec<&TreeTerm>> = in_cols
                        .iter()
                        .zip(&budgets)
                        .map(|(col, sz)| {
                            by_size[*sz]
                                .get(col)
                                .map(|v| v.iter().collect())
                                .unwrap_or_default()
                        })
                        .collect();
                    for_each_product(&choices, &mut |children| {
                        let mut children = children.to_vec();
                        if !operad.planar() {
                            children.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                        }
                        let t = TreeTerm::Node {
                            op: op.clone(),
                            colour: c.clone(),
                            children,
                        };
                        if local.insert(t.key_string()) {
                            bucket.push(t);
                        }
                    });
                }
            }
            for t in &bucket {
                seen.insert(CanonicalKey::from_term(t.clone()));
            }
            level.insert(c.clone(), bucket);
        }
        by_size.push(level);
    }
    Ok(seen.into_iter().collect())
}

/// A level function on the nodes of a tree, non-increasing toward the root.
/// Encodes an active map from a `k`-level tree; levels may be empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layering {
    pub k: usize,
    pub level: BTreeMap<NodeId, usize>, // values in 1..=k, 1 at the root end
}

/// All `k`-layerings of a tree. The trivial tree has exactly one for
/// every `k`.
pub fn enumerate_layerings(t: &PTree, k: usize) -> Vec<Layering> {
    assert!(k >= 1, "layerings need at least one level");
    let nodes = t.tree().traversal_nodes(); // root first
    let mut out = Vec::new();
    let mut level: BTreeMap<NodeId, usize> = BTreeMap::new();
    fn go(
        idx: usize,
        nodes: &[NodeId],
        t: &PTree,
        k: usize,
        level: &mut BTreeMap<NodeId, usize>,
        out: &mut Vec<Layering>,
    ) {
        if idx == nodes.len() {
            out.push(Layering {
                k,
                level: level.clone(),
            });
            return;
        }
        let n = nodes[idx];
        // the node below (toward the root), if any, was already assigned
        let floor = t
            .tree()
            .consumer(t.tree().output(n))
            .map(|below| level[&below])
            .unwrap_or(1);
        for l in floor..=k {
            level.insert(n, l);
            go(idx + 1, nodes, t, k, level, out);
        }
        level.remove(&n);
    }
    go(0, &nodes, t, k, &mut level, &mut out);
    out
}

/// Splits a tree along a 2-layering into the crown forest (one tree per
/// crossing edge, trivial when the edge is a leaf) and the trunk (the
/// subtree of level-1 nodes, trivial when that level is empty).
pub fn cut_layers(t: &PTree, c: &Layering) -> (Forest, CanonicalKey) {
    assert_eq!(c.k, 2, "cut_layers expects a 2-layering");
    let tree = t.tree();
    let crossing: Vec<EdgeId> = tree
        .traversal_edges()
        .into_iter()
        .filter(|e| {
            let above_top = tree.producer(*e).map(|n| c.level[&n] == 2).unwrap_or(true);
            let below_bottom = tree.consumer(*e).map(|n| c.level[&n] == 1).unwrap_or(true);
            above_top && below_bottom
        })
        .collect();
    let crown = Forest::from_keys(
        t.operad(),
        crossing
            .iter()
            .map(|e| CanonicalKey::from_term(t.term_above(*e)))
            .collect(),
    );
    let trunk = CanonicalKey::from_term(term_below(t, &crossing));
    (crown, trunk)
}

/// Canonical term of the part of the tree at or below the given cut edges:
/// the cut edges become leaves.
fn term_below(t: &PTree, cut: &[EdgeId]) -> TreeTerm {
    let cut_set: BTreeSet<EdgeId> = cut.iter().copied().collect();
    fn build(t: &PTree, e: EdgeId, cut: &BTreeSet<EdgeId>) -> TreeTerm {
        if cut.contains(&e) {
            return TreeTerm::Trivial(t.edge_colour(e).clone());
        }
        match t.tree().producer(e) {
            None => TreeTerm::Trivial(t.edge_colour(e).clone()),
            Some(n) => {
                let mut children: Vec<TreeTerm> = t
                    .tree()
                    .inputs(n)
                    .iter()
                    .map(|inp| build(t, *inp, cut))
                    .collect();
                if !t.operad().planar() {
                    children.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                }
                TreeTerm::Node {
                    op: t.node_op(n).clone(),
                    colour: t.edge_colour(e).clone(),
                    children,
                }
            }
        }
    }
    build(t, t.tree().root(), &cut_set)
}

/// A reduced cover: a subset of inner edges, whose connected node groups
/// are the blobs. Every blob contains at least one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Blobbing {
    pub inside_edges: BTreeSet<EdgeId>,
}

/// All blobbings of a nontrivial tree: the power set of its inner edges.
pub fn enumerate_blobbings(t: &PTree) -> Result<Vec<Blobbing>, CombinatError> {
    if t.is_trivial() {
        return Err(CombinatError::TrivialTreeHasNoBlobbing);
    }
    let inner = t.tree().inner_edges();
    let mut out = Vec::with_capacity(1 << inner.len());
    for mask in 0..(1u64 << inner.len()) {
        let inside = inner
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, e)| *e)
            .collect();
        out.push(Blobbing {
            inside_edges: inside,
        });
    }
    Ok(out)
}

/// The blobs of a blobbing: groups of nodes connected through inside edges,
/// listed in deterministic order.
pub fn blobs(t: &PTree, b: &Blobbing) -> Vec<Vec<NodeId>> {
    let tree = t.tree();
    let mut group: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut groups: Vec<Vec<NodeId>> = Vec::new();
    for n in tree.traversal_nodes() {
        // inherit the group across an inside output edge
        let e = tree.output(n);
        let inherited = if b.inside_edges.contains(&e) {
            tree.consumer(e).map(|below| group[&below])
        } else {
            None
        };
        let g = match inherited {
            Some(g) => g,
            None => {
                groups.push(Vec::new());
                groups.len() - 1
            }
        };
        group.insert(n, g);
        groups[g].push(n);
    }
    groups
}

/// The full subtree spanned by a set of nodes (assumed connected): the
/// boundary edges are kept as the root and leaves of the piece.
fn blob_term(t: &PTree, members: &[NodeId]) -> TreeTerm {
    let set: BTreeSet<NodeId> = members.iter().copied().collect();
    // root edge of the piece: the output edge whose consumer is outside
    let root_edge = members
        .iter()
        .map(|n| t.tree().output(*n))
        .find(|e| {
            t.tree()
                .consumer(*e)
                .map(|n| !set.contains(&n))
                .unwrap_or(true)
        })
        .expect("a connected node group has a unique lowest edge");
    fn build(t: &PTree, e: EdgeId, set: &BTreeSet<NodeId>) -> TreeTerm {
        match t.tree().producer(e) {
            Some(n) if set.contains(&n) => {
                let mut children: Vec<TreeTerm> = t
                    .tree()
                    .inputs(n)
                    .iter()
                    .map(|inp| build(t, *inp, set))
                    .collect();
                if !t.operad().planar() {
                    children.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                }
                TreeTerm::Node {
                    op: t.node_op(n).clone(),
                    colour: t.edge_colour(e).clone(),
                    children,
                }
            }
            _ => TreeTerm::Trivial(t.edge_colour(e).clone()),
        }
    }
    build(t, root_edge, &set)
}

/// The forest of blob contents: one full subtree per blob.
pub fn blob_contents(t: &PTree, b: &Blobbing) -> Forest {
    let keys = blobs(t, b)
        .iter()
        .map(|members| CanonicalKey::from_term(blob_term(t, members)))
        .collect();
    Forest::from_keys(t.operad(), keys)
}

/// Contracts each blob to a single node decorated by the residue of its
/// content; edges between blobs and outer edges keep their colours.
pub fn contract_blobbing(
    operad: &Operad,
    t: &PTree,
    b: &Blobbing,
) -> Result<CanonicalKey, CombinatError> {
    let groups = blobs(t, b);
    let group_of: BTreeMap<NodeId, usize> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, members)| members.iter().map(move |n| (*n, g)))
        .collect();
    let mut residues = Vec::with_capacity(groups.len());
    for members in &groups {
        let term = blob_term(t, members);
        residues.push(crate::operads::residue_term(operad, &term)?);
    }
    fn collect_boundary(t: &PTree, e: EdgeId, set: &BTreeSet<NodeId>, out: &mut Vec<EdgeId>) {
        match t.tree().producer(e) {
            Some(n) if set.contains(&n) => {
                for inp in t.tree().inputs(n) {
                    collect_boundary(t, *inp, set, out);
                }
            }
            _ => out.push(e),
        }
    }
    fn build(
        t: &PTree,
        e: EdgeId,
        group_of: &BTreeMap<NodeId, usize>,
        residues: &[Op],
        groups: &[Vec<NodeId>],
        operad: &Operad,
    ) -> TreeTerm {
        match t.tree().producer(e) {
            None => TreeTerm::Trivial(t.edge_colour(e).clone()),
            Some(n) => {
                let g = group_of[&n];
                let set: BTreeSet<NodeId> = groups[g].iter().copied().collect();
                let mut boundary = Vec::new();
                collect_boundary(t, e, &set, &mut boundary);
                let mut children: Vec<TreeTerm> = boundary
                    .iter()
                    .map(|be| build(t, *be, group_of, residues, groups, operad))
                    .collect();
                if !operad.planar() {
                    children.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                }
                TreeTerm::Node {
                    op: residues[g].clone(),
                    colour: t.edge_colour(e).clone(),
                    children,
                }
            }
        }
    }
    Ok(CanonicalKey::from_term(build(
        t,
        t.tree().root(),
        &group_of,
        &residues,
        &groups,
        operad,
    )))
}

/// Replaces each node of the skeleton by its refining tree. Inverse to
/// contraction along the corresponding blobbing.
pub fn glue(
    operad: &Operad,
    skeleton: &PTree,
    refinement: &BTreeMap<NodeId, CanonicalKey>,
) -> Result<CanonicalKey, CombinatError> {
    for n in skeleton.tree().nodes() {
        let r = refinement
            .get(n)
            .ok_or_else(|| CombinatError::ResidueMismatch(format!("node {n} not refined")))?;
        let res = crate::operads::residue_term(operad, r.term())?;
        if &res != skeleton.node_op(*n) {
            return Err(CombinatError::ResidueMismatch(format!(
                "node {n}: refinement residue differs from decoration"
            )));
        }
    }
    fn substitute_leaves(
        operad: &Operad,
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
            TreeTerm::Node {
                op,
                colour,
                children,
            } => {
                let mut mapped: Vec<TreeTerm> = children
                    .iter()
                    .map(|c| substitute_leaves(operad, c, subs, idx))
                    .collect();
                if !operad.planar() {
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
    fn build(
        operad: &Operad,
        skeleton: &PTree,
        refinement: &BTreeMap<NodeId, CanonicalKey>,
        e: EdgeId,
    ) -> Result<TreeTerm, CombinatError> {
        match skeleton.tree().producer(e) {
            None => Ok(TreeTerm::Trivial(skeleton.edge_colour(e).clone())),
            Some(n) => {
                let children: Vec<TreeTerm> = skeleton
                    .tree()
                    .inputs(n)
                    .iter()
                    .map(|inp| build(operad, skeleton, refinement, *inp))
                    .collect::<Result<_, _>>()?;
                let piece = refinement[&n].term().clone();
                if piece.leaf_count() != children.len() {
                    return Err(CombinatError::ResidueMismatch(format!(
                        "node {n}: refinement has {} leaves for {} slots",
                        piece.leaf_count(),
                        children.len()
                    )));
                }
                let mut idx = 0;
                Ok(substitute_leaves(operad, &piece, &children, &mut idx))
            }
        }
    }
    Ok(CanonicalKey::from_term(build(
        operad,
        skeleton,
        refinement,
        skeleton.tree().root(),
    )?))
}

/// Reads a refinement map off a blobbing: the contracted skeleton together
/// with, for each of its nodes, the content of the matching blob.
pub fn refinement_of_blobbing(
    operad: &Operad,
    t: &PTree,
    b: &Blobbing,
) -> Result<(PTree, BTreeMap<NodeId, CanonicalKey>), CombinatError> {
    let contracted = contract_blobbing(operad, t, b)?;
    let skeleton = contracted.term().to_ptree(operad);
    let groups = blobs(t, b);
    let terms: Vec<TreeTerm> = groups.iter().map(|g| blob_term(t, g)).collect();
    // match blob pieces to skeleton nodes by residue; ties are between
    // isomorphic pieces, so any assignment glues back to the same class
    let mut remaining: Vec<Option<TreeTerm>> = terms.into_iter().map(Some).collect();
    let mut refinement = BTreeMap::new();
    for n in skeleton.tree().traversal_nodes() {
        let want = skeleton.node_op(n);
        let found = remaining.iter_mut().find(|slot| match slot {
            Some(term) => crate::operads::residue_term(operad, term).ok().as_ref() == Some(want),
            None => false,
        });
        match found {
            Some(slot) => {
                let term = slot.take().expect("slot checked above");
                refinement.insert(n, CanonicalKey::from_term(term));
            }
            None => {
                return Err(CombinatError::ResidueMismatch(format!(
                    "no blob matches contracted node {n}"
                )))
            }
        }
    }
    Ok((skeleton, refinement))
}

/// Builds a corolla term on an operation.
pub fn corolla_term(operad: &Operad, op: &Op) -> TreeTerm {
    TreeTerm::Node {
        op: op.clone(),
        colour: operad.output_colour(op),
        children: operad
            .input_colours(op)
            .into_iter()
            .map(TreeTerm::Trivial)
            .collect(),
    }
}

/// Checked composition re-exported for substitution round-trip tests.
pub fn compose_checked(operad: &Operad, b: &Op, args: &[Op]) -> Result<Op, CombinatError> {
    Ok(op_compose(operad, b, args)?)
}

/// Residue with combinat error wrapping.
pub fn tree_residue(operad: &Operad, t: &PTree) -> Result<Op, CombinatError> {
    Ok(residue(operad, t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operads::{make_operad, MonoidTable, OperadDescriptor};

    fn identity() -> Operad {
        make_operad(OperadDescriptor::Identity).unwrap()
    }

    fn terminal() -> Operad {
        make_operad(OperadDescriptor::Terminal).unwrap()
    }

    fn ell(op: &Operad, n: usize) -> PTree {
        crate::trees::linear_ptree(op, Colour::Unit, &vec![Op::Unary; n])
    }

    #[test]
    fn identity_enumeration_is_linear() {
        let id = identity();
        let keys = enumerate_ptrees(&id, 3, 3).unwrap();
        assert_eq!(keys.len(), 4); // l0..l3
    }

    #[test]
    fn terminal_reduced_enumeration_matches_bruteforce() {
        let tr = make_operad(OperadDescriptor::TerminalReduced).unwrap();
        let keys = enumerate_ptrees(&tr, 3, 2).unwrap();
        // brute force: generate all shapes recursively and dedup
        fn gen(nodes: usize, max_arity: usize) -> Vec<TreeTerm> {
            if nodes == 0 {
                return vec![TreeTerm::Trivial(Colour::Unit)];
            }
            let mut out = Vec::new();
            for arity in 1..=max_arity {
                for parts in weak_compositions(nodes - 1, arity) {
                    let child_sets: Vec<Vec<TreeTerm>> =
                        parts.iter().map(|p| gen(*p, max_arity)).collect();
                    let refs: Vec<Vec<&TreeTerm>> =
                        child_sets.iter().map(|v| v.iter().collect()).collect();
                    for_each_product(&refs, &mut |children| {
                        let mut children = children.to_vec();
                        children.sort_by(|a, b| a.key_string().cmp(&b.key_string()));
                        out.push(TreeTerm::Node {
                            op: Op::Arity(arity as u32),
                            colour: Colour::Unit,
                            children,
                        });
                    });
                }
            }
            out
        }
        let mut expected = BTreeSet::new();
        for n in 0..=3 {
            for t in gen(n, 2) {
                expected.insert(t.key_string());
            }
        }
        let got: BTreeSet<String> = keys.iter().map(|k| k.as_str().to_string()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn layering_counts_for_linear_trees() {
        let id = identity();
        let l2 = ell(&id, 2);
        assert_eq!(enumerate_layerings(&l2, 1).len(), 1);
        assert_eq!(enumerate_layerings(&l2, 2).len(), 3);
        assert_eq!(enumerate_layerings(&l2, 3).len(), 6);
        let trivial = PTree::trivial(&id, Colour::Unit);
        for k in 1..=4 {
            assert_eq!(enumerate_layerings(&trivial, k).len(), 1);
        }
    }

    #[test]
    fn cut_layers_boundary_cases() {
        let id = identity();
        let l2 = ell(&id, 2);
        let layerings = enumerate_layerings(&l2, 2);
        let mut seen = BTreeSet::new();
        for c in &layerings {
            let (crown, trunk) = cut_layers(&l2, c);
            let crown_nodes = crown.node_count();
            let trunk_nodes = trunk.term().node_count();
            assert_eq!(crown_nodes + trunk_nodes, 2);
            seen.insert((crown_nodes, trunk_nodes));
        }
        assert_eq!(seen.len(), 3);

        // corolla with bottom = {node}: crown is two trivial trees
        let t = terminal();
        let corolla = corolla_term(&t, &Op::Arity(2)).to_ptree(&t);
        let all_bottom = Layering {
            k: 2,
            level: corolla.tree().nodes().iter().map(|n| (*n, 1)).collect(),
        };
        let (crown, trunk) = cut_layers(&corolla, &all_bottom);
        assert_eq!(crown.trees().len(), 2);
        assert!(crown.trees().iter().all(|k| k.term().is_trivial()));
        assert_eq!(trunk.term().node_count(), 1);

        // bottom empty: crown is the whole tree, trunk trivial
        let all_top = Layering {
            k: 2,
            level: corolla.tree().nodes().iter().map(|n| (*n, 2)).collect(),
        };
        let (crown, trunk) = cut_layers(&corolla, &all_top);
        assert_eq!(crown.trees().len(), 1);
        assert_eq!(crown.trees()[0].term().node_count(), 1);
        assert!(trunk.term().is_trivial());
    }

    #[test]
    fn blobbing_count_is_power_of_inner_edges() {
        let id = identity();
        let l3 = ell(&id, 3);
        assert_eq!(enumerate_blobbings(&l3).unwrap().len(), 4);
        let t = terminal();
        let corolla = corolla_term(&t, &Op::Arity(3)).to_ptree(&t);
        assert_eq!(enumerate_blobbings(&corolla).unwrap().len(), 1);
        let trivial = PTree::trivial(&id, Colour::Unit);
        assert!(matches!(
            enumerate_blobbings(&trivial),
            Err(CombinatError::TrivialTreeHasNoBlobbing)
        ));
    }

    #[test]
    fn blob_contents_and_contraction_on_l3() {
        let id = identity();
        let l3 = ell(&id, 3);
        assert_eq!(l3.tree().inner_edges().len(), 2);
        for b in enumerate_blobbings(&l3).unwrap() {
            let contents = blob_contents(&l3, &b);
            let contracted = contract_blobbing(&id, &l3, &b).unwrap();
            assert_eq!(contents.node_count(), 3);
            assert_eq!(contracted.term().node_count(), contents.trees().len());
            if b.inside_edges.len() == 1 {
                let sizes: Vec<usize> = contents
                    .trees()
                    .iter()
                    .map(|k| k.term().node_count())
                    .collect();
                assert_eq!(sizes.iter().sum::<usize>(), 3);
                assert_eq!(contracted.term().node_count(), 2);
            }
        }
    }

    #[test]
    fn contraction_of_singletons_is_identity() {
        let t = terminal();
        let tree = TreeTerm::Node {
            op: Op::Arity(2),
            colour: Colour::Unit,
            children: vec![
                TreeTerm::Node {
                    op: Op::Arity(1),
                    colour: Colour::Unit,
                    children: vec![TreeTerm::Trivial(Colour::Unit)],
                },
                TreeTerm::Trivial(Colour::Unit),
            ],
        }
        .to_ptree(&t);
        let b = Blobbing {
            inside_edges: BTreeSet::new(),
        };
        let contracted = contract_blobbing(&t, &tree, &b).unwrap();
        assert_eq!(contracted, crate::trees::canonical_key(&tree));
    }

    #[test]
    fn single_blob_contracts_to_residue_corolla() {
        let t = terminal();
        let tree = TreeTerm::Node {
            op: Op::Arity(2),
            colour: Colour::Unit,
            children: vec![
                TreeTerm::Node {
                    op: Op::Arity(2),
                    colour: Colour::Unit,
                    children: vec![TreeTerm::Trivial(Colour::Unit); 2],
                },
                TreeTerm::Trivial(Colour::Unit),
            ],
        }
        .to_ptree(&t);
        let all_inside = Blobbing {
            inside_edges: tree.tree().inner_edges().into_iter().collect(),
        };
        let contracted = contract_blobbing(&t, &tree, &all_inside).unwrap();
        let r = residue(&t, &tree).unwrap();
        assert_eq!(contracted.term(), &corolla_term(&t, &r));
    }

    #[test]
    fn glue_inverts_contraction() {
        let id = identity();
        let l3 = ell(&id, 3);
        for b in enumerate_blobbings(&l3).unwrap() {
            let (skeleton, refinement) = refinement_of_blobbing(&id, &l3, &b).unwrap();
            let reglued = glue(&id, &skeleton, &refinement).unwrap();
            assert_eq!(reglued, crate::trees::canonical_key(&l3));
        }
    }

    #[test]
    fn glue_rejects_wrong_leaf_count() {
        let t = terminal();
        let corolla2 = corolla_term(&t, &Op::Arity(2)).to_ptree(&t);
        let n = corolla2.tree().nodes()[0];
        let wrong = CanonicalKey::from_term(corolla_term(&t, &Op::Arity(1)));
        let refinement: BTreeMap<NodeId, CanonicalKey> = [(n, wrong)].into();
        assert!(matches!(
            glue(&t, &corolla2, &refinement),
            Err(CombinatError::ResidueMismatch(_))
        ));
    }

    #[test]
    fn monoid_contraction_multiplies() {
        let z3 = make_operad(OperadDescriptor::Monoid(
            MonoidTable::cyclic(3).names,
            MonoidTable::cyclic(3).table,
        ))
        .unwrap();
        let word = crate::trees::linear_ptree(
            &z3,
            Colour::Unit,
            &[Op::MElem(1), Op::MElem(2), Op::MElem(2)],
        );
        let all_inside = Blobbing {
            inside_edges: word.tree().inner_edges().into_iter().collect(),
        };
        let contracted = contract_blobbing(&z3, &word, &all_inside).unwrap();
        // 1+2+2 = 2 mod 3
        match contracted.term() {
            TreeTerm::Node { op, .. } => assert_eq!(*op, Op::MElem(2)),
            _ => panic!("expected a one-node tree"),
        }
    }
}
