//! Concrete countable amenable groups built from `Z^d` and finite cyclic
//! factors, their elements, finite subsets and box-shaped Følner windows.
//!
//! Every group here is abelian, so the group law is written additively on
//! integer coordinate tuples. Cyclic coordinates are kept reduced in `[0, n)`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{argument, structural, Error, Result};

/// Shape of a group: a lattice, a finite cyclic group, or a product.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupStructure {
    IntegerLattice(usize),
    CyclicFinite(u64),
    DirectProduct(Vec<GroupSpec>),
}

/// One coordinate slot: free (`Z`) or reduced modulo its order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Axis {
    Free,
    Cyclic(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GroupStructure", into = "GroupStructure")]
pub struct GroupSpec {
    structure: GroupStructure,
    #[serde(skip)]
    axes: Vec<Axis>,
}

impl TryFrom<GroupStructure> for GroupSpec {
    type Error = Error;

    fn try_from(structure: GroupStructure) -> Result<Self> {
        match structure {
            GroupStructure::IntegerLattice(d) => GroupSpec::lattice(d),
            GroupStructure::CyclicFinite(n) => GroupSpec::cyclic(n),
            GroupStructure::DirectProduct(factors) => GroupSpec::product(factors),
        }
    }
}

impl From<GroupSpec> for GroupStructure {
    fn from(spec: GroupSpec) -> Self {
        spec.structure
    }
}

/// An element of a [`GroupSpec`], stored as its coordinate tuple.
///
/// The derived order is lexicographic on coordinates; it is the canonical
/// order used for every matrix indexing in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<i64>);

impl GroupElement {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    /// The element `k` of `Z`.
    pub fn integer(k: i64) -> GroupElement {
        GroupElement(vec![k])
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl GroupSpec {
    pub fn lattice(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(argument("lattice rank must be at least 1"));
        }
        Ok(GroupSpec {
            structure: GroupStructure::IntegerLattice(rank),
            axes: vec![Axis::Free; rank],
        })
    }

    /// The integers, the group most scenarios live on.
    pub fn integers() -> Self {
        Self::lattice(1).expect("rank 1 is valid")
    }

    pub fn cyclic(order: u64) -> Result<Self> {
        if order == 0 {
            return Err(argument("cyclic order must be at least 1"));
        }
        let order_i = i64::try_from(order).map_err(|_| argument("cyclic order too large"))?;
        Ok(GroupSpec {
            structure: GroupStructure::CyclicFinite(order),
            axes: vec![Axis::Cyclic(order_i)],
        })
    }

    pub fn product(factors: Vec<GroupSpec>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(argument("a direct product needs at least two factors"));
        }
        let axes = factors.iter().flat_map(|f| f.axes.iter().copied()).collect();
        Ok(GroupSpec {
            structure: GroupStructure::DirectProduct(factors),
            axes,
        })
    }

    pub fn structure(&self) -> &GroupStructure {
        &self.structure
    }

    /// Number of coordinate slots of an element.
    pub fn arity(&self) -> usize {
        self.axes.len()
    }

    /// True for the group `Z` itself (rank-one lattice).
    pub fn is_integers(&self) -> bool {
        matches!(self.structure, GroupStructure::IntegerLattice(1))
    }

    /// True when every coordinate slot is cyclic.
    pub fn is_finite(&self) -> bool {
        self.axes.iter().all(|a| matches!(a, Axis::Cyclic(_)))
    }

    /// Group order when finite.
    pub fn order(&self) -> Option<u64> {
        self.axes.iter().try_fold(1u64, |acc, a| match a {
            Axis::Cyclic(n) => Some(acc * *n as u64),
            Axis::Free => None,
        })
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.arity()])
    }

    /// Builds an element, reducing cyclic slots into `[0, n)`.
    pub fn element(&self, coords: impl Into<Vec<i64>>) -> Result<GroupElement> {
        let mut coords = coords.into();
        if coords.len() != self.arity() {
            return Err(structural(format!(
                "element has {} coordinates, group {} expects {}",
                coords.len(),
                self,
                self.arity()
            )));
        }
        self.reduce(&mut coords);
        Ok(GroupElement(coords))
    }

    fn reduce(&self, coords: &mut [i64]) {
        for (c, axis) in coords.iter_mut().zip(&self.axes) {
            if let Axis::Cyclic(n) = axis {
                *c = c.rem_euclid(*n);
            }
        }
    }

    pub(crate) fn check(&self, g: &GroupElement) -> Result<()> {
        if g.arity() != self.arity() {
            return Err(structural(format!(
                "element {g} does not belong to {self} (arity {} vs {})",
                g.arity(),
                self.arity()
            )));
        }
        Ok(())
    }

    pub fn compose(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.compose_unchecked(g, h))
    }

    pub(crate) fn compose_unchecked(&self, g: &GroupElement, h: &GroupElement) -> GroupElement {
        let mut coords: Vec<i64> = g.0.iter().zip(&h.0).map(|(a, b)| a + b).collect();
        self.reduce(&mut coords);
        GroupElement(coords)
    }

    /// Allocation-free `g h` on raw coordinates.
    pub(crate) fn compose_into(&self, g: &[i64], h: &[i64], out: &mut Vec<i64>) {
        out.clear();
        out.extend(g.iter().zip(h).map(|(a, b)| a + b));
        self.reduce(out);
    }

    pub fn invert(&self, g: &GroupElement) -> Result<GroupElement> {
        self.check(g)?;
        Ok(self.invert_unchecked(g))
    }

    pub(crate) fn invert_unchecked(&self, g: &GroupElement) -> GroupElement {
        let mut coords: Vec<i64> = g.0.iter().map(|a| -a).collect();
        self.reduce(&mut coords);
        GroupElement(coords)
    }

    /// Box window `[0, i)^d` per lattice factor, full group per cyclic factor.
    pub fn folner_window(&self, index: usize) -> Result<FiniteSubset> {
        if index < 1 {
            return Err(argument("Følner window index must be at least 1"));
        }
        let ranges: Vec<(i64, i64)> = self
            .axes
            .iter()
            .map(|a| match a {
                Axis::Free => (0, index as i64),
                Axis::Cyclic(n) => (0, *n),
            })
            .collect();
        Ok(FiniteSubset::from_box(self, &ranges))
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.structure {
            GroupStructure::IntegerLattice(1) => write!(f, "Z"),
            GroupStructure::IntegerLattice(d) => write!(f, "Z^{d}"),
            GroupStructure::CyclicFinite(n) => write!(f, "Z/{n}"),
            GroupStructure::DirectProduct(factors) => {
                for (i, factor) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, " x ")?;
                    }
                    write!(f, "{factor}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for GroupSpec {
    type Err = Error;

    /// Parses `"Z"`, `"Z^2"`, `"Z/5"` and products such as `"Z x Z/3"`.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty group specification".into()));
        }
        let factors = compact
            .split(['x', '×'])
            .map(parse_factor)
            .collect::<Result<Vec<_>>>()?;
        if factors.len() == 1 {
            Ok(factors.into_iter().next().unwrap())
        } else {
            GroupSpec::product(factors)
        }
    }
}

fn parse_factor(token: &str) -> Result<GroupSpec> {
    let bad = || Error::Parse(format!("cannot parse group factor {token:?}"));
    let rest = token.strip_prefix('Z').ok_or_else(bad)?;
    if rest.is_empty() {
        return Ok(GroupSpec::integers());
    }
    if let Some(rank) = rest.strip_prefix('^') {
        let d: usize = rank.parse().map_err(|_| bad())?;
        return GroupSpec::lattice(d);
    }
    if let Some(order) = rest.strip_prefix('/') {
        let n: u64 = order.parse().map_err(|_| bad())?;
        return GroupSpec::cyclic(n);
    }
    Err(bad())
}

/// A finite subset of a group, duplicate-free and sorted canonically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteSubset {
    owner: GroupSpec,
    elements: Vec<GroupElement>,
}

impl FiniteSubset {
    pub fn new(owner: &GroupSpec, elements: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for g in elements {
            owner.check(&g)?;
            let mut coords = g.0;
            owner.reduce(&mut coords);
            set.insert(GroupElement(coords));
        }
        Ok(FiniteSubset {
            owner: owner.clone(),
            elements: set.into_iter().collect(),
        })
    }

    pub fn empty(owner: &GroupSpec) -> Self {
        FiniteSubset {
            owner: owner.clone(),
            elements: Vec::new(),
        }
    }

    /// Builds a subset from raw coordinate tuples.
    pub fn from_coords<I, C>(owner: &GroupSpec, coords: I) -> Result<Self>
    where
        I: IntoIterator<Item = C>,
        C: Into<Vec<i64>>,
    {
        let elements = coords
            .into_iter()
            .map(|c| owner.element(c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(owner, elements)
    }

    /// The integer interval `[start, end)` inside `Z`.
    pub fn interval(owner: &GroupSpec, start: i64, end: i64) -> Result<Self> {
        if owner.arity() != 1 {
            return Err(structural("intervals need a one-coordinate group"));
        }
        Self::from_coords(owner, (start..end).map(|k| vec![k]))
    }

    /// Axis-aligned box `prod [lo_k, hi_k)`, enumerated lexicographically.
    pub fn from_box(owner: &GroupSpec, ranges: &[(i64, i64)]) -> Self {
        assert_eq!(ranges.len(), owner.arity(), "box arity mismatch");
        let mut out: Vec<Vec<i64>> = vec![Vec::new()];
        for &(lo, hi) in ranges {
            let mut next = Vec::with_capacity(out.len() * (hi - lo).max(0) as usize);
            for prefix in &out {
                for c in lo..hi {
                    let mut v = prefix.clone();
                    v.push(c);
                    next.push(v);
                }
            }
            out = next;
        }
        let elements = out.into_iter().map(GroupElement);
        Self::new(owner, elements).expect("box coordinates have the owner's arity")
    }

    pub fn owner(&self) -> &GroupSpec {
        &self.owner
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, GroupElement> {
        self.elements.iter()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index_of(g).is_some()
    }

    /// Position of `g` in canonical order.
    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.elements.binary_search(g).ok()
    }

    pub(crate) fn index_of_coords(&self, c: &[i64]) -> Option<usize> {
        self.elements.binary_search_by(|e| e.0.as_slice().cmp(c)).ok()
    }

    fn same_owner(&self, other: &FiniteSubset) -> Result<()> {
        if self.owner != other.owner {
            return Err(structural(format!(
                "subsets live in different groups ({} vs {})",
                self.owner, other.owner
            )));
        }
        Ok(())
    }

    /// Left translate `gamma * self`.
    pub fn translate(&self, gamma: &GroupElement) -> Result<FiniteSubset> {
        self.owner.check(gamma)?;
        Ok(self.translate_unchecked(gamma))
    }

    pub(crate) fn translate_unchecked(&self, gamma: &GroupElement) -> FiniteSubset {
        let mut elements: Vec<GroupElement> = self
            .elements
            .iter()
            .map(|w| self.owner.compose_unchecked(gamma, w))
            .collect();
        elements.sort();
        FiniteSubset {
            owner: self.owner.clone(),
            elements,
        }
    }

    /// `{ g^-1 : g in self }`.
    pub fn inverse(&self) -> FiniteSubset {
        let elements = self.elements.iter().map(|g| self.owner.invert_unchecked(g));
        Self::new(&self.owner, elements).expect("same owner")
    }

    /// Pointwise product `{ a b : a in self, b in other }`.
    pub fn product(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        self.same_owner(other)?;
        let mut elements = Vec::with_capacity(self.len() * other.len());
        for a in &self.elements {
            for b in &other.elements {
                elements.push(self.owner.compose_unchecked(a, b));
            }
        }
        elements.sort_unstable();
        elements.dedup();
        Ok(FiniteSubset {
            owner: self.owner.clone(),
            elements,
        })
    }

    pub fn union(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        self.same_owner(other)?;
        let set: BTreeSet<_> = self.elements.iter().chain(&other.elements).cloned().collect();
        Ok(FiniteSubset {
            owner: self.owner.clone(),
            elements: set.into_iter().collect(),
        })
    }

    pub fn difference(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        self.same_owner(other)?;
        let elements = self
            .elements
            .iter()
            .filter(|g| !other.contains(g))
            .cloned()
            .collect();
        Ok(FiniteSubset {
            owner: self.owner.clone(),
            elements,
        })
    }

    pub fn intersection(&self, other: &FiniteSubset) -> Result<FiniteSubset> {
        self.same_owner(other)?;
        let elements = self
            .elements
            .iter()
            .filter(|g| other.contains(g))
            .cloned()
            .collect();
        Ok(FiniteSubset {
            owner: self.owner.clone(),
            elements,
        })
    }

    pub fn is_subset(&self, other: &FiniteSubset) -> bool {
        self.owner == other.owner && self.elements.iter().all(|g| other.contains(g))
    }

    pub fn is_disjoint(&self, other: &FiniteSubset) -> bool {
        self.elements.iter().all(|g| !other.contains(g))
    }
}

impl<'a> IntoIterator for &'a FiniteSubset {
    type Item = &'a GroupElement;
    type IntoIter = std::slice::Iter<'a, GroupElement>;

    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

impl Serialize for FiniteSubset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.elements.serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> GroupSpec {
        GroupSpec::integers()
    }

    #[test]
    fn compose_examples() {
        let z = z();
        let z5 = GroupSpec::cyclic(5).unwrap();
        let mixed: GroupSpec = "Z x Z/3".parse().unwrap();
        assert_eq!(
            z.compose(&z.element([3]).unwrap(), &z.element([4]).unwrap()).unwrap(),
            z.element([7]).unwrap()
        );
        assert_eq!(
            z5.compose(&z5.element([3]).unwrap(), &z5.element([4]).unwrap()).unwrap(),
            z5.element([2]).unwrap()
        );
        assert_eq!(
            mixed
                .compose(&mixed.element([1, 2]).unwrap(), &mixed.element([2, 2]).unwrap())
                .unwrap()
                .coords(),
            &[3, 1]
        );
    }

    #[test]
    fn compose_rejects_arity_mismatch() {
        let z2 = GroupSpec::lattice(2).unwrap();
        let g = z2.element([1, 2]).unwrap();
        let h = GroupElement(vec![1]);
        assert!(matches!(z2.compose(&g, &h), Err(Error::Structural(_))));
        assert!(z2.element([1]).is_err());
    }

    #[test]
    fn invert_examples() {
        let z5 = GroupSpec::cyclic(5).unwrap();
        let z2 = GroupSpec::lattice(2).unwrap();
        assert_eq!(z().invert(&z().element([3]).unwrap()).unwrap().coords(), &[-3]);
        assert_eq!(z5.invert(&z5.element([3]).unwrap()).unwrap().coords(), &[2]);
        assert_eq!(z2.invert(&z2.element([1, -2]).unwrap()).unwrap().coords(), &[-1, 2]);
    }

    #[test]
    fn translate_examples() {
        let z = z();
        let omega = FiniteSubset::interval(&z, 0, 3).unwrap();
        let moved = omega.translate(&z.element([2]).unwrap()).unwrap();
        assert_eq!(moved, FiniteSubset::interval(&z, 2, 5).unwrap());

        let z4 = GroupSpec::cyclic(4).unwrap();
        let pair = FiniteSubset::from_coords(&z4, [[0], [1]]).unwrap();
        let moved = pair.translate(&z4.element([3]).unwrap()).unwrap();
        assert_eq!(moved, FiniteSubset::from_coords(&z4, [[3], [0]]).unwrap());
        assert_eq!(moved.elements()[0].coords(), &[0]);

        assert_eq!(omega.translate(&z.identity()).unwrap(), omega);
    }

    #[test]
    fn folner_window_examples() {
        let z = z();
        assert_eq!(z.folner_window(4).unwrap(), FiniteSubset::interval(&z, 0, 4).unwrap());
        let z2 = GroupSpec::lattice(2).unwrap();
        let w = z2.folner_window(2).unwrap();
        let coords: Vec<&[i64]> = w.iter().map(|g| g.coords()).collect();
        assert_eq!(coords, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
        assert!(matches!(z.folner_window(0), Err(Error::Argument(_))));

        let z3 = GroupSpec::cyclic(3).unwrap();
        assert_eq!(z3.folner_window(1).unwrap().len(), 3);
        assert_eq!(z3.folner_window(50).unwrap().len(), 3);
        let mixed: GroupSpec = "Z x Z/3".parse().unwrap();
        assert_eq!(mixed.folner_window(5).unwrap().len(), 15);
    }

    #[test]
    fn parse_and_display() {
        for (text, arity) in [("Z", 1), ("Z^2", 2), ("Z/5", 1), ("Z x Z/3", 2), (" Z ^ 3 ", 3)] {
            let g: GroupSpec = text.parse().unwrap();
            assert_eq!(g.arity(), arity, "{text}");
            let again: GroupSpec = g.to_string().parse().unwrap();
            assert_eq!(again, g);
        }
        assert!("Q".parse::<GroupSpec>().is_err());
        assert!("Z/0".parse::<GroupSpec>().is_err());
        assert!("Z^0".parse::<GroupSpec>().is_err());
        assert!("".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn finite_groups() {
        let g: GroupSpec = "Z/2 x Z/3".parse().unwrap();
        assert!(g.is_finite());
        assert_eq!(g.order(), Some(6));
        assert_eq!(z().order(), None);
    }

    #[test]
    fn serde_roundtrip() {
        let g: GroupSpec = "Z x Z/3".parse().unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: GroupSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.arity(), 2);
    }
}
