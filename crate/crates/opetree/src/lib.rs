//! Exact symbolic combinatorics of rooted operadic trees.
//!
//! The crate provides decorated trees over pluggable operads, enumeration of
//! their layerings (admissible cuts) and blobbings (reduced covers), the two
//! incidence comultiplications these induce on exact-rational linear
//! combinations of tree monomials, brute-force verifiers for the coalgebra
//! and comodule-bialgebra axioms, and the classical specialisations: power
//! series duals on linear trees, mould calculus over a monoid, and the two
//! coproducts on combinatorial rooted trees reached through the core map.

pub mod combinat;
pub mod hopf;
pub mod operads;
pub mod special;
pub mod trees;

pub mod cli;

pub use operads::{make_operad, op_compose, residue, Colour, Op, Operad, OperadDescriptor};
pub use trees::{
    aut_order, canonical_key, decorate, leaves, validate_tree, CanonicalKey, PTree, Tree,
    TreeTerm,
};
