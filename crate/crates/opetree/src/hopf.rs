//! The two incidence comultiplications on tree monomials, the coaction,
//! counits, the free commutative product, and executable verifiers for the
//! coalgebra and comodule-bialgebra axioms. All arithmetic is exact
//! rational; no floating point anywhere.

use std::collections::BTreeMap;
use std::fmt;

use num::BigRational;
use num::{One, Zero};
use thiserror::Error;

use crate::combinat::{
    blob_contents, contract_blobbing, cut_layers, enumerate_blobbings, enumerate_layerings,
    enumerate_ptrees, CombinatError, Forest,
};
use crate::operads::Operad;
use crate::trees::CanonicalKey;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum HopfError {
    #[error("forests over different operads")]
    OperadMismatch,
    #[error("the blob comultiplication is not defined on trivial trees")]
    TrivialTreeInBlobsBasis,
    #[error(transparent)]
    Combinat(#[from] CombinatError),
}

/// Which incidence comultiplication to apply: `Cuts` is dual to grafting
/// (generators all trees), `Blobs` is dual to substitution (generators
/// nontrivial trees), `Coaction` extends the blob span to trivial trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoalgebraKind {
    Cuts,
    Blobs,
    Coaction,
}

/// Finite exact-rational linear combination over an ordered basis. Zero
/// coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinComb<B: Ord + Clone> {
    terms: BTreeMap<B, BigRational>,
}

impl<B: Ord + Clone> Default for LinComb<B> {
    fn default() -> Self {
        LinComb {
            terms: BTreeMap::new(),
        }
    }
}

impl<B: Ord + Clone> LinComb<B> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(basis: B) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(basis, BigRational::one());
        LinComb { terms }
    }

    pub fn with_coeff(basis: B, coeff: BigRational) -> Self {
        let mut l = Self::zero();
        l.add_term(basis, coeff);
        l
    }

    pub fn add_term(&mut self, basis: B, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(basis) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(b.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return Self::zero();
        }
        LinComb {
            terms: self
                .terms
                .iter()
                .map(|(b, c)| (b.clone(), c * factor))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&B, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, basis: &B) -> BigRational {
        self.terms
            .get(basis)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Applies a linear map given on basis elements.
    pub fn map_linear<C: Ord + Clone>(&self, f: impl Fn(&B) -> LinComb<C>) -> LinComb<C> {
        let mut out = LinComb::zero();
        for (b, c) in &self.terms {
            for (b2, c2) in f(b).terms {
                out.add_term(b2, c * &c2);
            }
        }
        out
    }

    /// Bilinear combination of two linear combinations.
    pub fn bilinear<C: Ord + Clone, D: Ord + Clone>(
        x: &LinComb<B>,
        y: &LinComb<C>,
        f: impl Fn(&B, &C) -> D,
    ) -> LinComb<D> {
        let mut out = LinComb::zero();
        for (b, cb) in &x.terms {
            for (c, cc) in &y.terms {
                out.add_term(f(b, c), cb * cc);
            }
        }
        out
    }

    /// Difference, for printing witnesses.
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.add_term(b.clone(), -c.clone());
        }
        out
    }
}

pub type Tensor2 = (Forest, Forest);
pub type Tensor3 = (Forest, Forest, Forest);

/// Commutative product of monomials: multiset union. Unit is the empty
/// forest.
pub fn mul(a: &Forest, b: &Forest) -> Result<Forest, HopfError> {
    if a.operad() != b.operad() {
        return Err(HopfError::OperadMismatch);
    }
    Ok(a.union(b))
}

/// Comultiplication of a single tree.
fn delta_tree(
    kind: CoalgebraKind,
    operad: &Operad,
    key: &CanonicalKey,
) -> Result<LinComb<Tensor2>, HopfError> {
    match kind {
        CoalgebraKind::Cuts => {
            let t = key.term().to_ptree(operad);
            let mut out = LinComb::zero();
            for c in enumerate_layerings(&t, 2) {
                let (crown, trunk) = cut_layers(&t, &c);
                out.add_term((crown, Forest::single(operad, trunk)), BigRational::one());
            }
            Ok(out)
        }
        CoalgebraKind::Blobs => {
            if key.term().is_trivial() {
                return Err(HopfError::TrivialTreeInBlobsBasis);
            }
            let t = key.term().to_ptree(operad);
            let mut out = LinComb::zero();
            for b in enumerate_blobbings(&t)? {
                let contents = blob_contents(&t, &b);
                let contracted = contract_blobbing(operad, &t, &b)?;
                out.add_term(
                    (contents, Forest::single(operad, contracted)),
                    BigRational::one(),
                );
            }
            Ok(out)
        }
        CoalgebraKind::Coaction => {
            if key.term().is_trivial() {
                let mut out = LinComb::zero();
                out.add_term(
                    (Forest::empty(operad), Forest::single(operad, key.clone())),
                    BigRational::one(),
                );
                Ok(out)
            } else {
                delta_tree(CoalgebraKind::Blobs, operad, key)
            }
        }
    }
}

/// Comultiplication of a forest: the single-tree spans extended
/// multiplicatively.
pub fn delta_forest(
    kind: CoalgebraKind,
    operad: &Operad,
    forest: &Forest,
) -> Result<LinComb<Tensor2>, HopfError> {
    let mut acc = LinComb::single((Forest::empty(operad), Forest::empty(operad)));
    for key in forest.trees() {
        let dt = delta_tree(kind, operad, key)?;
        acc = LinComb::bilinear(&acc, &dt, |(a1, a2), (b1, b2)| (a1.union(b1), a2.union(b2)));
    }
    Ok(acc)
}

/// Comultiplication of an exact-rational combination of forests.
pub fn delta(
    kind: CoalgebraKind,
    operad: &Operad,
    x: &LinComb<Forest>,
) -> Result<LinComb<Tensor2>, HopfError> {
    let mut out = LinComb::zero();
    for (forest, coeff) in x.terms() {
        if forest.operad() != operad {
            return Err(HopfError::OperadMismatch);
        }
        out = out.add(&delta_forest(kind, operad, forest)?.scale(coeff));
    }
    Ok(out)
}

/// Counit kind selector for [`counit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CounitKind {
    Cuts,
    Blobs,
}

/// Counit of a forest: under cuts the group-likes are the trivial trees,
/// under blobs the one-node corollas; multiplicative in both cases.
pub fn counit(kind: CounitKind, m: &Forest) -> BigRational {
    let ok = match kind {
        CounitKind::Cuts => m.trees().iter().all(|k| k.term().is_trivial()),
        CounitKind::Blobs => m.trees().iter().all(|k| k.term().is_corolla()),
    };
    if ok {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

/// The coaction: sum over blobbings of (blob forest, contracted tree),
/// sending a trivial tree to (empty forest, itself). Defined on all trees
/// and extended multiplicatively and linearly.
pub fn coaction(operad: &Operad, x: &LinComb<Forest>) -> Result<LinComb<Tensor2>, HopfError> {
    delta(CoalgebraKind::Coaction, operad, x)
}

// ---------------------------------------------------------------------------
// Axiom verification
// ---------------------------------------------------------------------------

/// Axioms checkable by [`verify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    CoassocCuts,
    CoassocBlobs,
    CounitCuts,
    CounitBlobs,
    CoactionCoassoc,
    CoactionCounit,
    ComoduleBialgebra,
    ComoduleCounit,
}

impl Axiom {
    pub fn parse(name: &str) -> Option<Axiom> {
        Some(match name {
            "coassoc-cuts" => Axiom::CoassocCuts,
            "coassoc-blobs" => Axiom::CoassocBlobs,
            "counit-cuts" => Axiom::CounitCuts,
            "counit-blobs" => Axiom::CounitBlobs,
            "coaction-coassoc" => Axiom::CoactionCoassoc,
            "coaction-counit" => Axiom::CoactionCounit,
            "comodule-bialgebra" => Axiom::ComoduleBialgebra,
            "comodule-counit" => Axiom::ComoduleCounit,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axiom::CoassocCuts => "coassoc-cuts",
            Axiom::CoassocBlobs => "coassoc-blobs",
            Axiom::CounitCuts => "counit-cuts",
            Axiom::CounitBlobs => "counit-blobs",
            Axiom::CoactionCoassoc => "coaction-coassoc",
            Axiom::CoactionCounit => "coaction-counit",
            Axiom::ComoduleBialgebra => "comodule-bialgebra",
            Axiom::ComoduleCounit => "comodule-counit",
        }
    }

    pub fn all() -> [Axiom; 8] {
        [
            Axiom::CoassocCuts,
            Axiom::CoassocBlobs,
            Axiom::CounitCuts,
            Axiom::CounitBlobs,
            Axiom::CoactionCoassoc,
            Axiom::CoactionCounit,
            Axiom::ComoduleBialgebra,
            Axiom::ComoduleCounit,
        ]
    }
}

/// Result of an exhaustive axiom check over bounded generators.
#[derive(Clone, Debug)]
pub struct Report {
    pub axiom: String,
    pub operad: String,
    pub checked: Vec<(String, bool)>,
    pub witness: Option<String>,
    pub passed: bool,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (gen, ok) in &self.checked {
            writeln!(f, "{}: {}", gen, if *ok { "ok" } else { "FAIL" })?;
        }
        if let (false, Some(w)) = (&self.passed, &self.witness) {
            writeln!(f, "witness:\n{w}")?;
        }
        writeln!(
            f,
            "{} over {}: {} ({} generators)",
            self.axiom,
            self.operad,
            if self.passed { "pass" } else { "FAIL" },
            self.checked.len()
        )
    }
}

fn format_tensor3_diff(lhs: &LinComb<Tensor3>, rhs: &LinComb<Tensor3>) -> String {
    let diff = lhs.sub(rhs);
    let mut s = String::from("lhs - rhs =\n");
    for ((f1, f2, f3), c) in diff.terms() {
        s.push_str(&format!(
            "  {} . {:?} (x) {:?} (x) {:?}\n",
            c,
            keys(f1),
            keys(f2),
            keys(f3)
        ));
    }
    s
}

fn keys(f: &Forest) -> Vec<&str> {
    f.trees().iter().map(|k| k.as_str()).collect()
}

/// Multiplies the first and third tensor factors after swapping the middle
/// two: the comodule structure on a tensor square.
fn mu13(x: &LinComb<Tensor2>, y: &LinComb<Tensor2>) -> Result<LinComb<Tensor3>, HopfError> {
    let mut out = LinComb::zero();
    for ((b1, m1), c1) in x.terms() {
        for ((b2, m2), c2) in y.terms() {
            out.add_term((mul(b1, b2)?, m1.clone(), m2.clone()), c1 * c2);
        }
    }
    Ok(out)
}

/// The coaction on a single tree, as used by the comodule checks. Exposed
/// so that diagnostics can substitute a deliberately broken coaction and
/// watch the verifier fail with a witness.
pub fn coaction_tree(operad: &Operad, key: &CanonicalKey) -> Result<LinComb<Tensor2>, HopfError> {
    delta_tree(CoalgebraKind::Coaction, operad, key)
}

pub type CoactionFn<'a> = &'a dyn Fn(&Operad, &CanonicalKey) -> Result<LinComb<Tensor2>, HopfError>;

fn coaction_forest_with(
    gamma: CoactionFn,
    operad: &Operad,
    forest: &Forest,
) -> Result<LinComb<Tensor2>, HopfError> {
    let mut acc = LinComb::single((Forest::empty(operad), Forest::empty(operad)));
    for key in forest.trees() {
        let dt = gamma(operad, key)?;
        acc = LinComb::bilinear(&acc, &dt, |(a1, a2), (b1, b2)| (a1.union(b1), a2.union(b2)));
    }
    Ok(acc)
}

/// Verifies one axiom exhaustively on all generators within the bounds.
pub fn verify(
    axiom: Axiom,
    operad: &Operad,
    max_nodes: usize,
    max_arity: usize,
) -> Result<Report, HopfError> {
    verify_with_coaction(axiom, operad, max_nodes, max_arity, &coaction_tree)
}

/// Same as [`verify`], with the coaction supplied explicitly (used by the
/// mutation diagnostics).
pub fn verify_with_coaction(
    axiom: Axiom,
    operad: &Operad,
    max_nodes: usize,
    max_arity: usize,
    gamma: CoactionFn,
) -> Result<Report, HopfError> {
    let generators = enumerate_ptrees(operad, max_nodes, max_arity)?;
    let mut checked = Vec::new();
    let mut witness = None;
    for key in &generators {
        let nontrivial = !key.term().is_trivial();
        let applicable = match axiom {
            Axiom::CoassocBlobs | Axiom::CounitBlobs => nontrivial,
            _ => true,
        };
        if !applicable {
            continue;
        }
        let singleton = LinComb::single(Forest::single(operad, key.clone()));
        let ok = match axiom {
            Axiom::CoassocCuts | Axiom::CoassocBlobs => {
                let kind = if axiom == Axiom::CoassocCuts {
                    CoalgebraKind::Cuts
                } else {
                    CoalgebraKind::Blobs
                };
                let d = delta(kind, operad, &singleton)?;
                let mut lhs = LinComb::zero();
                let mut rhs = LinComb::zero();
                for ((f1, f2), c) in d.terms() {
                    for ((g1, g2), c2) in delta_forest(kind, operad, f1)?.terms() {
                        lhs.add_term((g1.clone(), g2.clone(), f2.clone()), c * c2);
                    }
                    for ((g1, g2), c2) in delta_forest(kind, operad, f2)?.terms() {
                        rhs.add_term((f1.clone(), g1.clone(), g2.clone()), c * c2);
                    }
                }
                let ok = lhs == rhs;
                if !ok && witness.is_none() {
                    witness = Some(format!(
                        "generator {key}\n{}",
                        format_tensor3_diff(&lhs, &rhs)
                    ));
                }
                ok
            }
            Axiom::CounitCuts | Axiom::CounitBlobs => {
                let (kind, ckind) = if axiom == Axiom::CounitCuts {
                    (CoalgebraKind::Cuts, CounitKind::Cuts)
                } else {
                    (CoalgebraKind::Blobs, CounitKind::Blobs)
                };
                let d = delta(kind, operad, &singleton)?;
                let mut left = LinComb::zero();
                let mut right = LinComb::zero();
                for ((f1, f2), c) in d.terms() {
                    left.add_term(f2.clone(), c * counit(ckind, f1));
                    right.add_term(f1.clone(), c * counit(ckind, f2));
                }
                let id = LinComb::single(Forest::single(operad, key.clone()));
                let ok = left == id && right == id;
                if !ok && witness.is_none() {
                    witness = Some(format!("generator {key}: counit laws fail"));
                }
                ok
            }
            Axiom::CoactionCoassoc => {
                let g = gamma(operad, key)?;
                let mut lhs = LinComb::zero();
                let mut rhs = LinComb::zero();
                for ((b, m), c) in g.terms() {
                    for ((b1, b2), c2) in delta_forest(CoalgebraKind::Blobs, operad, b)?.terms() {
                        lhs.add_term((b1.clone(), b2.clone(), m.clone()), c * c2);
                    }
                    for ((b2, m2), c2) in coaction_forest_with(gamma, operad, m)?.terms() {
                        rhs.add_term((b.clone(), b2.clone(), m2.clone()), c * c2);
                    }
                }
                let ok = lhs == rhs;
                if !ok && witness.is_none() {
                    witness = Some(format!(
                        "generator {key}\n{}",
                        format_tensor3_diff(&lhs, &rhs)
                    ));
                }
                ok
            }
            Axiom::CoactionCounit => {
                let g = gamma(operad, key)?;
                let mut left = LinComb::zero();
                for ((b, m), c) in g.terms() {
                    left.add_term(m.clone(), c * counit(CounitKind::Blobs, b));
                }
                let id = LinComb::single(Forest::single(operad, key.clone()));
                let ok = left == id;
                if !ok && witness.is_none() {
                    witness = Some(format!("generator {key}: coaction counit law fails"));
                }
                ok
            }
            Axiom::ComoduleBialgebra => {
                // (id (x) Delta) . gamma == mu13 . (gamma (x) gamma) . Delta
                let g = gamma(operad, key)?;
                let mut lhs = LinComb::zero();
                for ((b, m), c) in g.terms() {
                    for ((f1, f2), c2) in delta_forest(CoalgebraKind::Cuts, operad, m)?.terms() {
                        lhs.add_term((b.clone(), f1.clone(), f2.clone()), c * c2);
                    }
                }
                let d = delta(CoalgebraKind::Cuts, operad, &singleton)?;
                let mut rhs = LinComb::zero();
                for ((f1, f2), c) in d.terms() {
                    let g1 = coaction_forest_with(gamma, operad, f1)?;
                    let g2 = coaction_forest_with(gamma, operad, f2)?;
                    rhs = rhs.add(&mu13(&g1, &g2)?.scale(c));
                }
                let ok = lhs == rhs;
                if !ok && witness.is_none() {
                    witness = Some(format!(
                        "generator {key}\n{}",
                        format_tensor3_diff(&lhs, &rhs)
                    ));
                }
                ok
            }
            Axiom::ComoduleCounit => {
                // (id (x) eps) . gamma == unit . eps
                let g = gamma(operad, key)?;
                let mut left: LinComb<Forest> = LinComb::zero();
                for ((b, m), c) in g.terms() {
                    left.add_term(b.clone(), c * counit(CounitKind::Cuts, m));
                }
                let eps = counit(CounitKind::Cuts, &Forest::single(operad, key.clone()));
                let right = LinComb::with_coeff(Forest::empty(operad), eps);
                let ok = left == right;
                if !ok && witness.is_none() {
                    let diff = left.sub(&right);
                    let mut s = String::from("lhs - rhs =\n");
                    for (f, c) in diff.terms() {
                        s.push_str(&format!("  {} . {:?}\n", c, keys(f)));
                    }
                    witness = Some(format!("generator {key}\n{s}"));
                }
                ok
            }
        };
        checked.push((key.as_str().to_string(), ok));
    }
    let passed = checked.iter().all(|(_, ok)| *ok);
    Ok(Report {
        axiom: axiom.name().to_string(),
        operad: operad.to_string(),
        checked,
        witness,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operads::{make_operad, Colour, Op, OperadDescriptor};
    use crate::trees::{linear_ptree, TreeTerm};

    fn identity() -> Operad {
        make_operad(OperadDescriptor::Identity).unwrap()
    }

    fn ell_key(op: &Operad, n: usize) -> CanonicalKey {
        crate::trees::canonical_key(&linear_ptree(op, Colour::Unit, &vec![Op::Unary; n]))
    }

    #[test]
    fn mul_is_commutative_with_unit() {
        let id = identity();
        let l1 = Forest::single(&id, ell_key(&id, 1));
        let e = Forest::empty(&id);
        assert_eq!(mul(&l1, &e).unwrap(), l1);
        let two = mul(&l1, &l1).unwrap();
        assert_eq!(two.trees().len(), 2);
        let l2 = Forest::single(&id, ell_key(&id, 2));
        assert_eq!(mul(&l1, &l2).unwrap(), mul(&l2, &l1).unwrap());
    }

    #[test]
    fn delta_cuts_on_l2() {
        let id = identity();
        let x = LinComb::single(Forest::single(&id, ell_key(&id, 2)));
        let d = delta(CoalgebraKind::Cuts, &id, &x).unwrap();
        assert_eq!(d.len(), 3);
        let expect = |i: usize, j: usize| {
            (
                Forest::single(&id, ell_key(&id, i)),
                Forest::single(&id, ell_key(&id, j)),
            )
        };
        for (i, j) in [(0, 2), (1, 1), (2, 0)] {
            assert_eq!(d.coeff(&expect(i, j)), BigRational::one());
        }
    }

    #[test]
    fn delta_blobs_on_l3() {
        let id = identity();
        let x = LinComb::single(Forest::single(&id, ell_key(&id, 3)));
        let d = delta(CoalgebraKind::Blobs, &id, &x).unwrap();
        // l1 l1 l1 (x) l3 + 2 l1 l2 (x) l2 + l3 (x) l1
        assert_eq!(d.len(), 3);
        let f = |ns: &[usize]| Forest::from_keys(&id, ns.iter().map(|n| ell_key(&id, *n)).collect());
        assert_eq!(d.coeff(&(f(&[1, 1, 1]), f(&[3]))), BigRational::one());
        assert_eq!(
            d.coeff(&(f(&[1, 2]), f(&[2]))),
            BigRational::from_integer(2.into())
        );
        assert_eq!(d.coeff(&(f(&[3]), f(&[1]))), BigRational::one());
    }

    #[test]
    fn delta_blobs_rejects_trivial() {
        let id = identity();
        let x = LinComb::single(Forest::single(&id, ell_key(&id, 0)));
        assert!(matches!(
            delta(CoalgebraKind::Blobs, &id, &x),
            Err(HopfError::TrivialTreeInBlobsBasis)
        ));
    }

    #[test]
    fn delta_cuts_on_terminal_corolla() {
        let t = make_operad(OperadDescriptor::Terminal).unwrap();
        let corolla = CanonicalKey::from_term(crate::combinat::corolla_term(&t, &Op::Arity(2)));
        let trivial = CanonicalKey::from_term(TreeTerm::Trivial(Colour::Unit));
        let x = LinComb::single(Forest::single(&t, corolla.clone()));
        let d = delta(CoalgebraKind::Cuts, &t, &x).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(
            d.coeff(&(
                Forest::single(&t, corolla.clone()),
                Forest::single(&t, trivial.clone())
            )),
            BigRational::one()
        );
        assert_eq!(
            d.coeff(&(
                Forest::from_keys(&t, vec![trivial.clone(), trivial]),
                Forest::single(&t, corolla)
            )),
            BigRational::one()
        );
    }

    #[test]
    fn counit_values() {
        let id = identity();
        assert_eq!(
            counit(CounitKind::Cuts, &Forest::single(&id, ell_key(&id, 0))),
            BigRational::one()
        );
        assert_eq!(
            counit(CounitKind::Cuts, &Forest::single(&id, ell_key(&id, 1))),
            BigRational::zero()
        );
        assert_eq!(
            counit(CounitKind::Blobs, &Forest::single(&id, ell_key(&id, 1))),
            BigRational::one()
        );
        assert_eq!(
            counit(CounitKind::Blobs, &Forest::single(&id, ell_key(&id, 2))),
            BigRational::zero()
        );
        // multiplicativity: a mixed monomial with a non-group-like factor
        let f1 = Forest::from_keys(&id, vec![ell_key(&id, 0), ell_key(&id, 1)]);
        assert_eq!(counit(CounitKind::Cuts, &f1), BigRational::zero());
    }

    #[test]
    fn coaction_on_trivial_and_corolla() {
        let id = identity();
        let l0 = ell_key(&id, 0);
        let x = LinComb::single(Forest::single(&id, l0.clone()));
        let g = coaction(&id, &x).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(
            g.coeff(&(Forest::empty(&id), Forest::single(&id, l0))),
            BigRational::one()
        );
        let l1 = ell_key(&id, 1);
        let x = LinComb::single(Forest::single(&id, l1.clone()));
        let g = coaction(&id, &x).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(
            g.coeff(&(Forest::single(&id, l1.clone()), Forest::single(&id, l1))),
            BigRational::one()
        );
    }

    #[test]
    fn grading_of_cuts_and_blobs() {
        let t = make_operad(OperadDescriptor::Terminal).unwrap();
        for key in enumerate_ptrees(&t, 4, 3).unwrap() {
            let n = key.term().node_count();
            let x = LinComb::single(Forest::single(&t, key.clone()));
            for ((f1, f2), _) in delta(CoalgebraKind::Cuts, &t, &x).unwrap().terms() {
                assert_eq!(f1.node_count() + f2.node_count(), n);
            }
            if n > 0 {
                for ((f1, f2), _) in delta(CoalgebraKind::Blobs, &t, &x).unwrap().terms() {
                    assert_eq!(f1.node_count(), n);
                    assert!(f2.node_count() >= 1 && f2.node_count() <= n);
                }
            }
        }
    }

    #[test]
    fn delta_is_multiplicative() {
        let id = identity();
        let a = Forest::single(&id, ell_key(&id, 1));
        let b = Forest::single(&id, ell_key(&id, 2));
        let ab = mul(&a, &b).unwrap();
        let d_ab = delta_forest(CoalgebraKind::Cuts, &id, &ab).unwrap();
        let d_a = delta_forest(CoalgebraKind::Cuts, &id, &a).unwrap();
        let d_b = delta_forest(CoalgebraKind::Cuts, &id, &b).unwrap();
        let product =
            LinComb::bilinear(&d_a, &d_b, |(a1, a2), (b1, b2)| (a1.union(b1), a2.union(b2)));
        assert_eq!(d_ab, product);
    }

    #[test]
    fn verify_small_axioms_pass() {
        let id = identity();
        for axiom in Axiom::all() {
            let report = verify(axiom, &id, 4, 4).unwrap();
            assert!(report.passed, "{} failed:\n{}", axiom.name(), report);
        }
    }

    #[test]
    fn mutated_coaction_fails_with_witness() {
        let id = identity();
        // drop the single-blob term from the coaction of multi-node trees
        let broken = |operad: &Operad, key: &CanonicalKey| -> Result<LinComb<Tensor2>, HopfError> {
            let full = coaction_tree(operad, key)?;
            let mut out = LinComb::zero();
            for ((b, m), c) in full.terms() {
                if b.trees().len() == 1 && key.term().node_count() > 1 {
                    continue;
                }
                out.add_term((b.clone(), m.clone()), c.clone());
            }
            Ok(out)
        };
        let report = verify_with_coaction(Axiom::ComoduleBialgebra, &id, 3, 3, &broken).unwrap();
        assert!(!report.passed);
        assert!(report.witness.is_some());
    }
}
