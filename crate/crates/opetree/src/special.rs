//! Worked specializations: the power-series reference formulas on linear
//! trees, mould calculus over a finite monoid, the core map onto
//! combinatorial rooted trees, and the cut/contraction coproducts there.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::BigRational;
use num::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::combinat::Forest;
use crate::hopf::{delta, CoalgebraKind, CounitKind, HopfError, LinComb, Tensor2};
use crate::operads::{residue_term, Colour, MonoidTable, Op, Operad, OperadKind};
use crate::trees::{CanonicalKey, PTree, TreeTerm};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SpecialError {
    #[error("moulds over different monoids or length bounds")]
    MonoidMismatch,
    #[error("the contraction coproduct needs a nonempty tree")]
    EmptyTree,
    #[error("word is not monotone: {0} then {1}")]
    NotMonotone(String, String),
    #[error("word letter not recognised: {0}")]
    UnknownLetter(String),
    #[error("empty word over a poset has no colour")]
    EmptyPosetWord,
    #[error("operad is not a monoid or poset")]
    NotUnaryOperad,
    #[error(transparent)]
    Hopf(#[from] HopfError),
}

// ---------------------------------------------------------------------------
// Power-series reference formulas on linear trees
// ---------------------------------------------------------------------------

/// Which closed-form comultiplication to produce on linear trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdbKind {
    /// Dual to multiplication of power series: all splits `i + j = n`.
    Mult,
    /// Dual to substitution: all compositions `n_1 + ... + n_k = n`.
    Subst,
}

fn ell(operad: &Operad, n: usize) -> CanonicalKey {
    let mut term = TreeTerm::Trivial(Colour::Unit);
    for _ in 0..n {
        term = TreeTerm::Node {
            op: Op::Unary,
            colour: Colour::Unit,
            children: vec![term],
        };
    }
    CanonicalKey::from_term(term)
}

/// The closed-form right-hand sides on linear trees over the one-colour
/// unary operad, as exact tensors.
pub fn fdb_reference(kind: FdbKind, operad: &Operad, n: usize) -> LinComb<Tensor2> {
    debug_assert!(matches!(operad.kind(), OperadKind::Identity));
    let mut out = LinComb::zero();
    match kind {
        FdbKind::Mult => {
            for i in 0..=n {
                out.add_term(
                    (
                        Forest::single(operad, ell(operad, i)),
                        Forest::single(operad, ell(operad, n - i)),
                    ),
                    BigRational::one(),
                );
            }
        }
        FdbKind::Subst => {
            assert!(n >= 1, "substitution formula needs n >= 1");
            // compositions of n into k >= 1 positive parts
            fn compositions(n: usize) -> Vec<Vec<usize>> {
                if n == 0 {
                    return vec![vec![]];
                }
                let mut out = Vec::new();
                for first in 1..=n {
                    for mut rest in compositions(n - first) {
                        let mut v = vec![first];
                        v.append(&mut rest);
                        out.push(v);
                    }
                }
                out
            }
            for parts in compositions(n) {
                let k = parts.len();
                let forest =
                    Forest::from_keys(operad, parts.iter().map(|p| ell(operad, *p)).collect());
                out.add_term(
                    (forest, Forest::single(operad, ell(operad, k))),
                    BigRational::one(),
                );
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Moulds
// ---------------------------------------------------------------------------

/// A word-indexed table of exact rationals over a finite monoid, truncated
/// at a word-length bound. Absent entries are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mould {
    pub monoid: MonoidTable,
    pub max_len: usize,
    values: BTreeMap<Vec<usize>, BigRational>,
}

impl Mould {
    pub fn zero(monoid: MonoidTable, max_len: usize) -> Mould {
        Mould {
            monoid,
            max_len,
            values: BTreeMap::new(),
        }
    }

    /// The composition unit: one on single letters, zero elsewhere.
    pub fn identity(monoid: MonoidTable, max_len: usize) -> Mould {
        let mut m = Mould::zero(monoid, max_len);
        for a in 0..m.monoid.names.len() {
            m.set(vec![a], BigRational::one());
        }
        m
    }

    /// An indicator mould: one on the given word, zero elsewhere.
    pub fn indicator(monoid: MonoidTable, max_len: usize, word: Vec<usize>) -> Mould {
        let mut m = Mould::zero(monoid, max_len);
        m.set(word, BigRational::one());
        m
    }

    pub fn set(&mut self, word: Vec<usize>, value: BigRational) {
        assert!(word.len() <= self.max_len);
        if value.is_zero() {
            self.values.remove(&word);
        } else {
            self.values.insert(word, value);
        }
    }

    pub fn get(&self, word: &[usize]) -> BigRational {
        self.values
            .get(word)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Monoid product of the word's letters, left to right.
    pub fn norm(&self, word: &[usize]) -> Option<usize> {
        let mut it = word.iter();
        let first = *it.next()?;
        Some(it.fold(first, |acc, x| self.monoid.mul(acc, *x)))
    }

    /// All words over the monoid of length at most `max_len`.
    pub fn words(monoid: &MonoidTable, max_len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                for a in 0..monoid.names.len() {
                    let mut w2 = w.clone();
                    w2.push(a);
                    next.push(w2);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Deterministic pseudo-random mould with small rational entries.
    pub fn random(monoid: MonoidTable, max_len: usize, rng: &mut ChaCha8Rng) -> Mould {
        let words = Mould::words(&monoid, max_len);
        let mut m = Mould::zero(monoid, max_len);
        for w in words {
            let num: i64 = rng.gen_range(-9..=9);
            let den: i64 = rng.gen_range(1..=4);
            m.set(w, BigRational::new(num.into(), den.into()));
        }
        m
    }
}

impl fmt::Display for Mould {
    fmt_mould_body!();
}

macro_rules! fmt_mould_body {
    () => {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            for w in Mould::words(&self.monoid, self.max_len) {
                let v = self.get(&w);
                if !v.is_zero() {
                    let name: Vec<&str> =
                        w.iter().map(|i| self.monoid.names[*i].as_str()).collect();
                    writeln!(
                        f,
                        "{} -> {}",
                        if name.is_empty() {
                            "()".to_string()
                        } else {
                            name.join(",")
                        },
                        v
                    )?;
                }
            }
            Ok(())
        }
    };
}
use fmt_mould_body;

/// Deconcatenation-dual product: sum over two-part splits, empty parts
/// allowed.
pub fn mould_product(m: &Mould, n: &Mould) -> Result<Mould, SpecialError> {
    if m.monoid != n.monoid || m.max_len != n.max_len {
        return Err(SpecialError::MonoidMismatch);
    }
    let mut out = Mould::zero(m.monoid.clone(), m.max_len);
    for w in Mould::words(&m.monoid, m.max_len) {
        let mut acc = BigRational::zero();
        for split in 0..=w.len() {
            acc += m.get(&w[..split]) * n.get(&w[split..]);
        }
        out.set(w, acc);
    }
    Ok(out)
}

/// Block-substitution-dual composition: sum over splits into nonempty
/// blocks, the outer mould evaluated on the blockwise monoid products. On
/// the empty word the value is the outer mould's empty-word value.
pub fn mould_compose(m: &Mould, n: &Mould) -> Result<Mould, SpecialError> {
    if m.monoid != n.monoid || m.max_len != n.max_len {
        return Err(SpecialError::MonoidMismatch);
    }
    fn block_splits(len: usize) -> Vec<Vec<usize>> {
        // compositions of `len` into positive parts
        if len == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=len {
            for mut rest in block_splits(len - first) {
                let mut v = vec![first];
                v.append(&mut rest);
                out.push(v);
            }
        }
        out
    }
    let mut out = Mould::zero(m.monoid.clone(), m.max_len);
    for w in Mould::words(&m.monoid, m.max_len) {
        if w.is_empty() {
            out.set(w, m.get(&[]));
            continue;
        }
        let mut acc = BigRational::zero();
        for blocks in block_splits(w.len()) {
            let mut inner = BigRational::one();
            let mut norms = Vec::with_capacity(blocks.len());
            let mut pos = 0;
            for b in &blocks {
                let piece = &w[pos..pos + b];
                pos += b;
                inner *= n.get(piece);
                norms.push(m.norm(piece).expect("blocks are nonempty"));
            }
            acc += inner * m.get(&norms);
        }
        out.set(w, acc);
    }
    Ok(out)
}

/// Linear tree over the monoid operad for a word (letters decorate nodes,
/// leaf end first). The empty word is the trivial tree.
pub fn monoid_word_tree(operad: &Operad, word: &[usize]) -> PTree {
    let ops: Vec<Op> = word.iter().map(|i| Op::MElem(*i as u32)).collect();
    crate::trees::linear_ptree(operad, Colour::Unit, &ops)
}

fn term_word(term: &TreeTerm) -> Vec<usize> {
    // node decorations read from the leaf end to the root end
    match term {
        TreeTerm::Trivial(_) => vec![],
        TreeTerm::Node { op, children, .. } => {
            let mut w = term_word(&children[0]);
            match op {
                Op::MElem(i) => w.push(*i as usize),
                _ => panic!("monoid word tree expected"),
            }
            w
        }
    }
}

fn eval_on_forest(m: &Mould, f: &Forest) -> BigRational {
    f.trees()
        .iter()
        .map(|k| m.get(&term_word(k.term())))
        .product()
}

/// Report from the mould duality check.
#[derive(Clone, Debug)]
pub struct MouldReport {
    pub checked: Vec<(String, bool)>,
    pub witness: Option<String>,
    pub passed: bool,
}

impl fmt::Display for MouldReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (what, ok) in &self.checked {
            writeln!(f, "{}: {}", what, if *ok { "ok" } else { "FAIL" })?;
        }
        if let Some(w) = &self.witness {
            writeln!(f, "witness: {w}")?;
        }
        writeln!(f, "duality: {}", if self.passed { "pass" } else { "FAIL" })
    }
}

/// Checks, for seeded random moulds, that the mould product is the
/// functional convolution through the cut comultiplication of word trees,
/// that composition is the convolution through the blob comultiplication,
/// that composition distributes over the product from the left, and that
/// the stored right-distributivity counterexample still fails.
pub fn mould_duality_check(
    monoid: &MonoidTable,
    max_len: usize,
    samples: usize,
    seed: u64,
) -> Result<MouldReport, SpecialError> {
    let operad = crate::operads::make_operad(crate::operads::OperadDescriptor::Monoid(
        monoid.names.clone(),
        monoid.table.clone(),
    ))
    .expect("monoid table was already validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let moulds: Vec<Mould> = (0..samples.max(3))
        .map(|_| Mould::random(monoid.clone(), max_len, &mut rng))
        .collect();
    let words = Mould::words(monoid, max_len);
    let mut checked = Vec::new();
    let mut witness = None;

    // precompute the two comultiplications of each word tree
    let mut cuts_table = BTreeMap::new();
    let mut blobs_table = BTreeMap::new();
    for w in &words {
        let t = monoid_word_tree(&operad, w);
        let x = LinComb::single(Forest::single(&operad, crate::trees::canonical_key(&t)));
        cuts_table.insert(w.clone(), delta(CoalgebraKind::Cuts, &operad, &x)?);
        if !w.is_empty() {
            blobs_table.insert(w.clone(), delta(CoalgebraKind::Blobs, &operad, &x)?);
        }
    }

    for (i, m) in moulds.iter().enumerate() {
        let n = &moulds[(i + 1) % moulds.len()];
        let p = &moulds[(i + 2) % moulds.len()];

        // product duality: (M x N)^w = sum over cuts of M(crown) N(trunk)
        let prod = mould_product(m, n)?;
        let mut ok = true;
        for w in &words {
            let mut conv = BigRational::zero();
            for ((crown, trunk), c) in cuts_table[w].terms() {
                conv += c * eval_on_forest(m, crown) * eval_on_forest(n, trunk);
            }
            if conv != prod.get(w) {
                ok = false;
                if witness.is_none() {
                    witness = Some(format!("product duality fails on word {w:?}"));
                }
            }
        }
        checked.push((format!("product duality (sample {i})"), ok));

        // composition duality: (M o N)^w = sum over blobbings of
        // N(contents) M(contracted), plus the empty-word convention
        let comp = mould_compose(m, n)?;
        let mut ok = true;
        for w in &words {
            let expected = if w.is_empty() {
                m.get(&[])
            } else {
                let mut conv = BigRational::zero();
                for ((contents, contracted), c) in blobs_table[w].terms() {
                    conv += c * eval_on_forest(n, contents) * eval_on_forest(m, contracted);
                }
                conv
            };
            if expected != comp.get(w) {
                ok = false;
                if witness.is_none() {
                    witness = Some(format!("composition duality fails on word {w:?}"));
                }
            }
        }
        checked.push((format!("composition duality (sample {i})"), ok));

        // left distributivity: (M x N) o P = (M o P) x (N o P)
        let lhs = mould_compose(&mould_product(m, n)?, p)?;
        let rhs = mould_product(&mould_compose(m, p)?, &mould_compose(n, p)?)?;
        let ok = lhs == rhs;
        if !ok && witness.is_none() {
            witness = Some(format!("left distributivity fails (sample {i})"));
        }
        checked.push((format!("left distributivity (sample {i})"), ok));
    }

    // unit of composition
    let ident = Mould::identity(monoid.clone(), max_len);
    for (i, m) in moulds.iter().enumerate() {
        let ok = mould_compose(m, &ident)? == *m;
        if !ok && witness.is_none() {
            witness = Some(format!("composition unit fails (sample {i})"));
        }
        checked.push((format!("composition unit (sample {i})"), ok));
    }

    // stored right-distributivity counterexample: with M the indicator of
    // the one-letter word on the monoid unit, N = P the indicator of a
    // one-letter word squaring to the unit, the two sides differ on that
    // letter repeated twice whenever such a letter exists.
    if let Some(a) = (0..monoid.names.len()).find(|a| monoid.mul(*a, *a) == monoid.unit) {
        if max_len >= 2 {
            let m = Mould::indicator(monoid.clone(), max_len, vec![monoid.unit]);
            let n = Mould::indicator(monoid.clone(), max_len, vec![a]);
            let lhs = mould_compose(&m, &mould_product(&n, &n)?)?;
            let rhs = mould_product(&mould_compose(&m, &n)?, &mould_compose(&m, &n)?)?;
            let word = vec![a, a];
            let differs = lhs.get(&word) != rhs.get(&word);
            if !differs && witness.is_none() {
                witness = Some("right distributivity unexpectedly holds on the stored counterexample".into());
            }
            checked.push(("right distributivity counterexample".to_string(), differs));
        }
    }

    let passed = checked.iter().all(|(_, ok)| *ok);
    Ok(MouldReport {
        checked,
        witness,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Combinatorial rooted trees: core, cuts, contractions
// ---------------------------------------------------------------------------

/// A rooted tree with nodes only (no open edges, no decorations), in
/// canonical form (children sorted). The empty tree is allowed: it is the
/// core of a trivial tree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CombTree(pub Option<CombNode>);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CombNode {
    pub children: Vec<CombNode>, // sorted
}

impl CombNode {
    pub fn new(mut children: Vec<CombNode>) -> CombNode {
        children.sort();
        CombNode { children }
    }

    pub fn leaf() -> CombNode {
        CombNode { children: vec![] }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(CombNode::node_count).sum::<usize>()
    }

    fn write(&self, out: &mut String) {
        out.push('(');
        for c in &self.children {
            c.write(out);
        }
        out.push(')');
    }
}

impl CombTree {
    pub fn empty() -> CombTree {
        CombTree(None)
    }

    pub fn single() -> CombTree {
        CombTree(Some(CombNode::leaf()))
    }

    pub fn node_count(&self) -> usize {
        self.0.as_ref().map(CombNode::node_count).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_none()
    }
}

impl fmt::Display for CombTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("e"),
            Some(n) => {
                let mut s = String::new();
                n.write(&mut s);
                f.write_str(&s)
            }
        }
    }
}

/// A commutative monomial of nonempty combinatorial trees.
pub type CombForest = Vec<CombNode>; // sorted

fn sorted(mut f: CombForest) -> CombForest {
    f.sort();
    f
}

/// The core: forget decorations and shave off leaf and root edges, keeping
/// the nodes and the inner edges. The trivial tree maps to the empty tree.
pub fn core(t: &PTree) -> CombTree {
    fn go(term: &TreeTerm) -> Option<CombNode> {
        match term {
            TreeTerm::Trivial(_) => None,
            TreeTerm::Node { children, .. } => Some(CombNode::new(
                children.iter().filter_map(go).collect(),
            )),
        }
    }
    CombTree(go(&t.canonical_term()))
}

/// Core of a canonical key.
pub fn core_key(key: &CanonicalKey) -> CombTree {
    fn go(term: &TreeTerm) -> Option<CombNode> {
        match term {
            TreeTerm::Trivial(_) => None,
            TreeTerm::Node { children, .. } => Some(CombNode::new(
                children.iter().filter_map(go).collect(),
            )),
        }
    }
    CombTree(go(key.term()))
}

/// Core of a forest, dropping the empty cores of trivial trees.
pub fn core_forest(f: &Forest) -> CombForest {
    sorted(
        f.trees()
            .iter()
            .filter_map(|k| core_key(k).0)
            .collect(),
    )
}

/// The cut coproduct on combinatorial trees: sum over admissible cuts of
/// crown forest tensor rooted subtree, with the two boundary terms
/// included.
pub fn bck_delta(t: &CombTree) -> LinComb<(CombForest, CombForest)> {
    let mut out = LinComb::zero();
    match &t.0 {
        None => {
            out.add_term((vec![], vec![]), BigRational::one());
        }
        Some(root) => {
            // enumerate rooted subtrees containing the root, or empty
            // state per node: kept (in the trunk) or cut off (crown root)
            fn go(
                node: &CombNode,
                crown: &mut Vec<CombNode>,
            ) -> Vec<(Option<CombNode>, Vec<CombNode>)> {
                // returns (kept version of this node or None if cut, crown pieces)
                let _ = crown;
                let mut results = Vec::new();
                // option 1: cut this node off entirely
                results.push((None, vec![node.clone()]));
                // option 2: keep this node, recurse into children
                let mut partials: Vec<(Vec<CombNode>, Vec<CombNode>)> = vec![(vec![], vec![])];
                for child in &node.children {
                    let child_results = go(child, &mut Vec::new());
                    let mut next = Vec::new();
                    for (kept, crown_pieces) in &partials {
                        for (child_kept, child_crown) in &child_results {
                            let mut kept2 = kept.clone();
                            if let Some(k) = child_kept {
                                kept2.push(k.clone());
                            }
                            let mut crown2 = crown_pieces.clone();
                            crown2.extend(child_crown.iter().cloned());
                            next.push((kept2, crown2));
                        }
                    }
                    partials = next;
                }
                for (kept, crown_pieces) in partials {
                    results.push((Some(CombNode::new(kept)), crown_pieces));
                }
                results
            }
            for (kept, crown_pieces) in go(root, &mut Vec::new()) {
                let trunk = match kept {
                    Some(k) => vec![k],
                    None => vec![],
                };
                out.add_term((sorted(crown_pieces), trunk), BigRational::one());
            }
        }
    }
    out
}

/// The contraction coproduct on combinatorial trees: sum over partitions
/// of the node set into connected blocks of (block forest, contracted
/// tree); one term per subset of edges.
pub fn cem_delta(t: &CombTree) -> Result<LinComb<(CombForest, CombForest)>, SpecialError> {
    let root = t.0.as_ref().ok_or(SpecialError::EmptyTree)?;
    // list edges as (preorder index of parent, child position)
    // walk subsets of edges via recursion: each child edge is either
    // contracted into the parent block or cut
    // returns list of (block containing this node grown so far is handled
    // by returning, for each choice: the forest of completed blocks below,
    // the partial block of this node (children already attached), and the
    // contracted subtree rooted here)
    fn go(node: &CombNode) -> Vec<(Vec<CombNode>, CombNode, CombNode)> {
        // (completed blocks strictly below, block containing this node,
        //  contracted subtree rooted at this node's block-node)
        let mut acc: Vec<(Vec<CombNode>, Vec<CombNode>, Vec<CombNode>)> =
            vec![(vec![], vec![], vec![])];
        for child in &node.children {
            let child_choices = go(child);
            let mut next = Vec::new();
            for (blocks, my_block_children, contracted_children) in &acc {
                for (child_blocks, child_block, child_contracted) in &child_choices {
                    // choice A: the edge to this child is inside the block
                    {
                        let mut blocks2 = blocks.clone();
                        blocks2.extend(child_blocks.iter().cloned());
                        let mut mine2 = my_block_children.clone();
                        mine2.push(child_block.clone());
                        let mut contr2 = contracted_children.clone();
                        // child's block-node merges into ours: adopt its
                        // contracted children
                        contr2.extend(child_contracted.children.iter().cloned());
                        next.push((blocks2, mine2, contr2));
                    }
                    // choice B: the edge is cut; the child's block closes
                    {
                        let mut blocks2 = blocks.clone();
                        blocks2.extend(child_blocks.iter().cloned());
                        blocks2.push(child_block.clone());
                        let mine2 = my_block_children.clone();
                        let mut contr2 = contracted_children.clone();
                        contr2.push(child_contracted.clone());
                        next.push((blocks2, mine2, contr2));
                    }
                }
            }
            acc = next;
        }
        acc.into_iter()
            .map(|(blocks, my_block_children, contracted_children)| {
                (
                    blocks,
                    CombNode::new(my_block_children),
                    CombNode::new(contracted_children),
                )
            })
            .collect()
    }
    let mut out = LinComb::zero();
    for (mut blocks, root_block, contracted) in go(root) {
        blocks.push(root_block);
        out.add_term((sorted(blocks), vec![contracted]), BigRational::one());
    }
    Ok(out)
}

/// All combinatorial rooted trees with up to `max_nodes` nodes.
pub fn enumerate_comb_trees(max_nodes: usize) -> Vec<CombNode> {
    // by exact size, children as multisets of smaller trees
    let mut by_size: Vec<Vec<CombNode>> = vec![vec![]];
    for size in 1..=max_nodes {
        let mut bucket = Vec::new();
        let mut seen = BTreeSet::new();
        // children form a multiset of trees with total size - 1
        fn multisets(
            by_size: &[Vec<CombNode>],
            total: usize,
            min: &CombNode,
            acc: &mut Vec<CombNode>,
            emit: &mut dyn FnMut(&[CombNode]),
        ) {
            if total == 0 {
                emit(acc);
                return;
            }
            for sz in 1..=total {
                for t in &by_size[sz] {
                    if t >= min || acc.is_empty() {
                        if !acc.is_empty() && t < acc.last().unwrap() {
                            continue;
                        }
                        acc.push(t.clone());
                        multisets(by_size, total - sz, min, acc, emit);
                        acc.pop();
                    }
                }
            }
        }
        let min = CombNode::leaf();
        let mut acc = Vec::new();
        multisets(&by_size, size - 1, &min, &mut acc, &mut |children| {
            let t = CombNode::new(children.to_vec());
            let mut s = String::new();
            t.write(&mut s);
            if seen.insert(s) {
                bucket.push(t);
            }
        });
        by_size.push(bucket);
    }
    by_size.into_iter().flatten().collect()
}

/// Report from the core homomorphism check.
pub use crate::hopf::Report;

/// Checks that taking core intertwines the two tree comultiplications with
/// the cut and contraction coproducts of combinatorial trees, exhaustively
/// over all naked trees within the bound.
pub fn check_core_homomorphism(max_nodes: usize) -> Result<Report, SpecialError> {
    let terminal = crate::operads::make_operad(crate::operads::OperadDescriptor::Terminal)
        .expect("terminal operad");
    let generators = crate::combinat::enumerate_ptrees(&terminal, max_nodes, max_nodes)
        .map_err(HopfError::from)?;
    let mut checked = Vec::new();
    let mut witness = None;
    for key in &generators {
        let x = LinComb::single(Forest::single(&terminal, key.clone()));
        // cuts vs crown/trunk cut coproduct
        let d = delta(CoalgebraKind::Cuts, &terminal, &x)?;
        let mut mapped: LinComb<(CombForest, CombForest)> = LinComb::zero();
        for ((crown, trunk), c) in d.terms() {
            mapped.add_term((core_forest(crown), core_forest(trunk)), c.clone());
        }
        let expected = bck_delta(&core_key(key));
        let cuts_ok = mapped == expected;
        if !cuts_ok && witness.is_none() {
            witness = Some(format!("cut coproduct mismatch at {key}"));
        }
        // blobs vs contraction coproduct (nontrivial generators only)
        let blobs_ok = if key.term().is_trivial() {
            true
        } else {
            let d = delta(CoalgebraKind::Blobs, &terminal, &x)?;
            let mut mapped: LinComb<(CombForest, CombForest)> = LinComb::zero();
            for ((contents, contracted), c) in d.terms() {
                mapped.add_term((core_forest(contents), core_forest(contracted)), c.clone());
            }
            let expected = cem_delta(&core_key(key))?;
            let ok = mapped == expected;
            if !ok && witness.is_none() {
                witness = Some(format!("contraction coproduct mismatch at {key}"));
            }
            ok
        };
        checked.push((key.as_str().to_string(), cuts_ok && blobs_ok));
    }
    let passed = checked.iter().all(|(_, ok)| *ok);
    Ok(Report {
        axiom: "core-homomorphism".into(),
        operad: "terminal".into(),
        checked,
        witness,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Comodule-bialgebra axioms on combinatorial trees
// ---------------------------------------------------------------------------

fn comb_counit_cuts(f: &CombForest) -> BigRational {
    if f.is_empty() {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

fn comb_counit_blobs(f: &CombForest) -> BigRational {
    if f.iter().all(|t| t.node_count() == 1) {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

fn bck_delta_forest(f: &CombForest) -> LinComb<(CombForest, CombForest)> {
    let mut acc = LinComb::single((vec![], vec![]));
    for t in f {
        let dt = bck_delta(&CombTree(Some(t.clone())));
        acc = LinComb::bilinear(&acc, &dt, |(a1, a2), (b1, b2)| {
            let mut f1 = a1.clone();
            f1.extend(b1.iter().cloned());
            let mut f2 = a2.clone();
            f2.extend(b2.iter().cloned());
            (sorted(f1), sorted(f2))
        });
    }
    acc
}

fn cem_delta_forest(f: &CombForest) -> Result<LinComb<(CombForest, CombForest)>, SpecialError> {
    let mut acc = LinComb::single((vec![], vec![]));
    for t in f {
        let dt = cem_delta(&CombTree(Some(t.clone())))?;
        acc = LinComb::bilinear(&acc, &dt, |(a1, a2), (b1, b2)| {
            let mut f1 = a1.clone();
            f1.extend(b1.iter().cloned());
            let mut f2 = a2.clone();
            f2.extend(b2.iter().cloned());
            (sorted(f1), sorted(f2))
        });
    }
    Ok(acc)
}

/// Verifies the comodule-bialgebra diagrams on combinatorial trees up to
/// the given size: the contraction coproduct coacts on the cut coproduct.
pub fn check_comb_comodule(max_nodes: usize) -> Result<Report, SpecialError> {
    let mut checked = Vec::new();
    let mut witness = None;
    for t in enumerate_comb_trees(max_nodes) {
        let tree = CombTree(Some(t.clone()));
        let gamma = cem_delta(&tree)?; // the coaction on nonempty trees
        // comodule-bialgebra: (id (x) bck) . gamma == mu13 (gamma (x) gamma) bck
        let mut lhs = LinComb::zero();
        for ((b, m), c) in gamma.terms() {
            for ((f1, f2), c2) in bck_delta_forest(m).terms() {
                lhs.add_term((b.clone(), f1.clone(), f2.clone()), c * c2);
            }
        }
        let mut rhs = LinComb::zero();
        for ((f1, f2), c) in bck_delta(&tree).terms() {
            let g1 = cem_delta_forest(f1)?;
            let g2 = cem_delta_forest(f2)?;
            for ((b1, m1), c1) in g1.terms() {
                for ((b2, m2), c2) in g2.terms() {
                    let mut b = b1.clone();
                    b.extend(b2.iter().cloned());
                    rhs.add_term((sorted(b), m1.clone(), m2.clone()), c * c1 * c2);
                }
            }
        }
        let bialg_ok = lhs == rhs;
        if !bialg_ok && witness.is_none() {
            witness = Some(format!("comodule diagram fails at {tree}"));
        }
        // comodule counit: (id (x) eps_cuts) gamma == eps_cuts . unit
        let mut left: LinComb<CombForest> = LinComb::zero();
        for ((b, m), c) in gamma.terms() {
            left.add_term(b.clone(), c * comb_counit_cuts(m));
        }
        let right = LinComb::with_coeff(vec![], comb_counit_cuts(&vec![t.clone()]));
        let counit_ok = left == right;
        if !counit_ok && witness.is_none() {
            witness = Some(format!("comodule counit fails at {tree}"));
        }
        // coassociativity of the contraction coproduct, and its counit
        let mut lhs3 = LinComb::zero();
        let mut rhs3 = LinComb::zero();
        for ((b, m), c) in gamma.terms() {
            for ((b1, b2), c2) in cem_delta_forest(b)?.terms() {
                lhs3.add_term((b1.clone(), b2.clone(), m.clone()), c * c2);
            }
            for ((b2, m2), c2) in cem_delta_forest(m)?.terms() {
                rhs3.add_term((b.clone(), b2.clone(), m2.clone()), c * c2);
            }
        }
        let coassoc_ok = lhs3 == rhs3;
        if !coassoc_ok && witness.is_none() {
            witness = Some(format!("contraction coassociativity fails at {tree}"));
        }
        let mut eps_left: LinComb<CombForest> = LinComb::zero();
        for ((b, m), c) in gamma.terms() {
            eps_left.add_term(m.clone(), c * comb_counit_blobs(b));
        }
        let eps_ok = eps_left == LinComb::single(vec![t.clone()]);
        if !eps_ok && witness.is_none() {
            witness = Some(format!("contraction counit fails at {tree}"));
        }
        checked.push((
            tree.to_string(),
            bialg_ok && counit_ok && coassoc_ok && eps_ok,
        ));
    }
    let passed = checked.iter().all(|(_, ok)| *ok);
    Ok(Report {
        axiom: "comb-comodule-bialgebra".into(),
        operad: "combinatorial trees".into(),
        checked,
        witness,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Word trees over monoid and poset operads
// ---------------------------------------------------------------------------

/// Builds the linear tree of a word. Over a poset the letters decorate the
/// edges (so `n` letters give `n - 1` nodes and consecutive letters must be
/// related); over a monoid the letters decorate the nodes.
pub fn word_to_tree(operad: &Operad, letters: &[String]) -> Result<PTree, SpecialError> {
    match operad.kind() {
        OperadKind::Poset(p) => {
            if letters.is_empty() {
                return Err(SpecialError::EmptyPosetWord);
            }
            let idx: Vec<usize> = letters
                .iter()
                .map(|l| {
                    p.names
                        .iter()
                        .position(|n| n == l)
                        .ok_or_else(|| SpecialError::UnknownLetter(l.clone()))
                })
                .collect::<Result<_, _>>()?;
            for w in idx.windows(2) {
                if !p.holds(w[0], w[1]) {
                    return Err(SpecialError::NotMonotone(
                        p.names[w[0]].clone(),
                        p.names[w[1]].clone(),
                    ));
                }
            }
            // ops from the leaf end: (x1,x2) nearest the leaf
            let ops: Vec<Op> = idx
                .windows(2)
                .map(|w| Op::PPair(w[0] as u32, w[1] as u32))
                .collect();
            Ok(crate::trees::linear_ptree(
                operad,
                Colour::Elem(idx[0] as u32),
                &ops,
            ))
        }
        OperadKind::Monoid(m) => {
            let idx: Vec<usize> = letters
                .iter()
                .map(|l| {
                    m.names
                        .iter()
                        .position(|n| n == l)
                        .ok_or_else(|| SpecialError::UnknownLetter(l.clone()))
                })
                .collect::<Result<_, _>>()?;
            Ok(monoid_word_tree(operad, &idx))
        }
        _ => Err(SpecialError::NotUnaryOperad),
    }
}

/// Reads the word back off a linear tree over a monoid or poset operad.
pub fn tree_to_word(operad: &Operad, term: &TreeTerm) -> Option<Vec<String>> {
    match operad.kind() {
        OperadKind::Monoid(m) => {
            fn collect(term: &TreeTerm, out: &mut Vec<u32>) -> bool {
                match term {
                    TreeTerm::Trivial(_) => true,
                    TreeTerm::Node { op, children, .. } => {
                        if children.len() != 1 {
                            return false;
                        }
                        if !collect(&children[0], out) {
                            return false;
                        }
                        match op {
                            Op::MElem(i) => {
                                out.push(*i);
                                true
                            }
                            _ => false,
                        }
                    }
                }
            }
            let mut idx = Vec::new();
            if collect(term, &mut idx) {
                Some(idx.iter().map(|i| m.names[*i as usize].clone()).collect())
            } else {
                None
            }
        }
        OperadKind::Poset(p) => {
            // edges from the leaf end: leaf colour, then each node's output
            fn collect(term: &TreeTerm, out: &mut Vec<u32>) -> bool {
                match term {
                    TreeTerm::Trivial(Colour::Elem(c)) => {
                        out.push(*c);
                        true
                    }
                    TreeTerm::Node {
                        colour: Colour::Elem(c),
                        children,
                        ..
                    } => {
                        if children.len() != 1 {
                            return false;
                        }
                        if !collect(&children[0], out) {
                            return false;
                        }
                        out.push(*c);
                        true
                    }
                    _ => false,
                }
            }
            let mut idx = Vec::new();
            if collect(term, &mut idx) {
                Some(idx.iter().map(|i| p.names[*i as usize].clone()).collect())
            } else {
                None
            }
        }
        _ => None,
    }
}

// keep Signed in scope for rational sign use in diagnostics
#[allow(unused)]
fn rational_is_negative(r: &BigRational) -> bool {
    r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operads::{make_operad, OperadDescriptor, PosetRel};

    fn identity() -> Operad {
        make_operad(OperadDescriptor::Identity).unwrap()
    }

    #[test]
    fn fdb_mult_n3() {
        let id = identity();
        let r = fdb_reference(FdbKind::Mult, &id, 3);
        assert_eq!(r.len(), 4);
        for i in 0..=3 {
            let b = (
                Forest::single(&id, ell(&id, i)),
                Forest::single(&id, ell(&id, 3 - i)),
            );
            assert_eq!(r.coeff(&b), BigRational::one());
        }
    }

    #[test]
    fn fdb_subst_n3() {
        let id = identity();
        let r = fdb_reference(FdbKind::Subst, &id, 3);
        assert_eq!(r.len(), 3);
        let f = |ns: &[usize]| Forest::from_keys(&id, ns.iter().map(|n| ell(&id, *n)).collect());
        assert_eq!(r.coeff(&(f(&[1, 1, 1]), f(&[3]))), BigRational::one());
        assert_eq!(
            r.coeff(&(f(&[1, 2]), f(&[2]))),
            BigRational::from_integer(2.into())
        );
        assert_eq!(r.coeff(&(f(&[3]), f(&[1]))), BigRational::one());
    }

    #[test]
    fn fdb_matches_engine_small() {
        let id = identity();
        for n in 0..=5 {
            let x = LinComb::single(Forest::single(&id, ell(&id, n)));
            let got = delta(CoalgebraKind::Cuts, &id, &x).unwrap();
            assert_eq!(got, fdb_reference(FdbKind::Mult, &id, n));
            if n >= 1 {
                let got = delta(CoalgebraKind::Blobs, &id, &x).unwrap();
                assert_eq!(got, fdb_reference(FdbKind::Subst, &id, n));
            }
        }
    }

    #[test]
    fn mould_product_small_words() {
        let z2 = MonoidTable::cyclic(2);
        let mut m = Mould::zero(z2.clone(), 2);
        let mut n = Mould::zero(z2.clone(), 2);
        m.set(vec![], BigRational::from_integer(2.into()));
        m.set(vec![1], BigRational::from_integer(3.into()));
        n.set(vec![], BigRational::from_integer(5.into()));
        n.set(vec![1], BigRational::from_integer(7.into()));
        let p = mould_product(&m, &n).unwrap();
        // empty word: only the empty splitting
        assert_eq!(p.get(&[]), BigRational::from_integer(10.into()));
        // single letter: two splittings
        assert_eq!(p.get(&[1]), BigRational::from_integer((2 * 7 + 3 * 5).into()));
        // two letters: three splittings
        let mut m2 = m.clone();
        m2.set(vec![1, 1], BigRational::from_integer(11.into()));
        let mut n2 = n.clone();
        n2.set(vec![1, 1], BigRational::from_integer(13.into()));
        let p = mould_product(&m2, &n2).unwrap();
        assert_eq!(
            p.get(&[1, 1]),
            BigRational::from_integer((2 * 13 + 3 * 7 + 11 * 5).into())
        );
    }

    #[test]
    fn mould_compose_small_words() {
        let z2 = MonoidTable::cyclic(2);
        let mut m = Mould::zero(z2.clone(), 2);
        let mut n = Mould::zero(z2.clone(), 2);
        for (w, v) in [(vec![0], 2), (vec![1], 3)] {
            m.set(w, BigRational::from_integer(v.into()));
        }
        m.set(vec![1, 1], BigRational::from_integer(5.into()));
        m.set(vec![0, 1], BigRational::from_integer(7.into()));
        n.set(vec![1], BigRational::from_integer(11.into()));
        n.set(vec![1, 1], BigRational::from_integer(13.into()));
        let c = mould_compose(&m, &n).unwrap();
        // single letter: only k=1
        assert_eq!(c.get(&[1]), BigRational::from_integer((11 * 3).into()));
        // two letters: N^{w} M^{|w|} + N^{w1} N^{w2} M^{|w1| |w2|}
        // |11| = 0 in Z/2
        assert_eq!(
            c.get(&[1, 1]),
            BigRational::from_integer((13 * 2 + 11 * 11 * 5).into())
        );
    }

    #[test]
    fn mould_compose_unit() {
        let z3 = MonoidTable::cyclic(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mould::random(z3.clone(), 3, &mut rng);
        let i = Mould::identity(z3, 3);
        assert_eq!(mould_compose(&m, &i).unwrap(), m);
    }

    #[test]
    fn mould_compose_is_associative() {
        let z2 = MonoidTable::cyclic(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Mould::random(z2.clone(), 3, &mut rng);
        let b = Mould::random(z2.clone(), 3, &mut rng);
        let c = Mould::random(z2.clone(), 3, &mut rng);
        let lhs = mould_compose(&mould_compose(&a, &b).unwrap(), &c).unwrap();
        let rhs = mould_compose(&a, &mould_compose(&b, &c).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn mould_product_assoc_comm() {
        let z2 = MonoidTable::cyclic(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Mould::random(z2.clone(), 3, &mut rng);
        let b = Mould::random(z2.clone(), 3, &mut rng);
        let c = Mould::random(z2.clone(), 3, &mut rng);
        assert_eq!(
            mould_product(&a, &b).unwrap(),
            mould_product(&b, &a).unwrap()
        );
        assert_eq!(
            mould_product(&mould_product(&a, &b).unwrap(), &c).unwrap(),
            mould_product(&a, &mould_product(&b, &c).unwrap()).unwrap()
        );
    }

    #[test]
    fn duality_check_passes() {
        let report = mould_duality_check(&MonoidTable::cyclic(2), 3, 5, 7).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn core_shapes() {
        let id = identity();
        let t = crate::trees::linear_ptree(&id, Colour::Unit, &[Op::Unary; 3]);
        let c = core(&t);
        assert_eq!(c.node_count(), 3);
        assert_eq!(c.to_string(), "((()))");
        let trivial = PTree::trivial(&id, Colour::Unit);
        assert!(core(&trivial).is_empty());
        let term = crate::combinat::corolla_term(
            &make_operad(OperadDescriptor::Terminal).unwrap(),
            &Op::Arity(5),
        );
        let corolla = term.to_ptree(&make_operad(OperadDescriptor::Terminal).unwrap());
        assert_eq!(core(&corolla).node_count(), 1);
    }

    #[test]
    fn bck_on_small_trees() {
        // single node
        let one = CombTree::single();
        let d = bck_delta(&one);
        assert_eq!(d.len(), 2);
        assert_eq!(d.coeff(&(vec![CombNode::leaf()], vec![])), BigRational::one());
        assert_eq!(d.coeff(&(vec![], vec![CombNode::leaf()])), BigRational::one());
        // 2-chain
        let chain = CombNode::new(vec![CombNode::leaf()]);
        let d = bck_delta(&CombTree(Some(chain.clone())));
        assert_eq!(d.len(), 3);
        assert_eq!(d.coeff(&(vec![chain.clone()], vec![])), BigRational::one());
        assert_eq!(
            d.coeff(&(vec![CombNode::leaf()], vec![CombNode::leaf()])),
            BigRational::one()
        );
        assert_eq!(d.coeff(&(vec![], vec![chain.clone()])), BigRational::one());
        // cherry: cherry(x)1 + ..(x). + 2 .(x)chain + 1(x)cherry
        let cherry = CombNode::new(vec![CombNode::leaf(), CombNode::leaf()]);
        let d = bck_delta(&CombTree(Some(cherry.clone())));
        assert_eq!(
            d.coeff(&(vec![CombNode::leaf()], vec![chain.clone()])),
            BigRational::from_integer(2.into())
        );
        assert_eq!(
            d.coeff(&(vec![CombNode::leaf(), CombNode::leaf()], vec![CombNode::leaf()])),
            BigRational::one()
        );
        assert_eq!(d.coeff(&(vec![cherry.clone()], vec![])), BigRational::one());
        assert_eq!(d.coeff(&(vec![], vec![cherry])), BigRational::one());
    }

    #[test]
    fn cem_on_small_trees() {
        let one = CombTree::single();
        let d = cem_delta(&one).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(
            d.coeff(&(vec![CombNode::leaf()], vec![CombNode::leaf()])),
            BigRational::one()
        );
        let chain = CombNode::new(vec![CombNode::leaf()]);
        let d = cem_delta(&CombTree(Some(chain.clone()))).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(
            d.coeff(&(
                vec![CombNode::leaf(), CombNode::leaf()],
                vec![chain.clone()]
            )),
            BigRational::one()
        );
        assert_eq!(
            d.coeff(&(vec![chain.clone()], vec![CombNode::leaf()])),
            BigRational::one()
        );
        let cherry = CombNode::new(vec![CombNode::leaf(), CombNode::leaf()]);
        let d = cem_delta(&CombTree(Some(cherry.clone()))).unwrap();
        assert_eq!(
            d.coeff(&(
                vec![CombNode::leaf(), CombNode::leaf(), CombNode::leaf()],
                vec![cherry.clone()]
            )),
            BigRational::one()
        );
        assert_eq!(
            d.coeff(&(
                vec![CombNode::leaf(), chain.clone()],
                vec![chain.clone()]
            )),
            BigRational::from_integer(2.into())
        );
        assert_eq!(
            d.coeff(&(vec![cherry], vec![CombNode::leaf()])),
            BigRational::one()
        );
        assert!(matches!(
            cem_delta(&CombTree::empty()),
            Err(SpecialError::EmptyTree)
        ));
    }

    #[test]
    fn comb_tree_counts() {
        // 1, 1, 2, 4, 9 rooted trees on 1..=5 nodes
        let all = enumerate_comb_trees(5);
        let mut by_size = BTreeMap::new();
        for t in all {
            *by_size.entry(t.node_count()).or_insert(0) += 1;
        }
        assert_eq!(by_size[&1], 1);
        assert_eq!(by_size[&2], 1);
        assert_eq!(by_size[&3], 2);
        assert_eq!(by_size[&4], 4);
        assert_eq!(by_size[&5], 9);
    }

    #[test]
    fn core_homomorphism_small() {
        let report = check_core_homomorphism(3).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn word_trees_over_poset() {
        let nat = make_operad(OperadDescriptor::Poset(
            PosetRel::chain(10).names,
            PosetRel::chain(10).le,
        ))
        .unwrap();
        let letters: Vec<String> = "2335".chars().map(|c| c.to_string()).collect();
        let t = word_to_tree(&nat, &letters).unwrap();
        assert_eq!(t.tree().node_count(), 3);
        let word = tree_to_word(&nat, &t.canonical_term()).unwrap();
        assert_eq!(word, letters);
        // single letter: trivial tree of that colour
        let t = word_to_tree(&nat, &["7".to_string()]).unwrap();
        assert!(t.is_trivial());
        assert_eq!(*t.root_colour(), Colour::Elem(7));
        // non-monotone
        let letters: Vec<String> = "32".chars().map(|c| c.to_string()).collect();
        assert!(matches!(
            word_to_tree(&nat, &letters),
            Err(SpecialError::NotMonotone(_, _))
        ));
    }

    #[test]
    fn comb_comodule_small() {
        let report = check_comb_comodule(3).unwrap();
        assert!(report.passed, "{report}");
    }
}
