//! Boundaries, relative amenability, greedy packings and greedy
//! ε-quasi-tilings of finite windows.
//!
//! All scans run over candidate translates in canonical (lexicographic)
//! order, so every result is deterministic.

use std::collections::{BTreeMap, HashSet};

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{argument, Result};
use crate::groups::{FiniteSubset, GroupElement};

/// Slack for comparisons of the form `|F'| >= (1 - eps) |F|`.
const COUNT_SLACK: f64 = 1e-9;

fn require_nonempty(set: &FiniteSubset, what: &str) -> Result<()> {
    if set.is_empty() {
        return Err(argument(format!("{what} must be nonempty")));
    }
    Ok(())
}

fn require_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(argument(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Every `gamma` with `gamma F` meeting `omega`, i.e. `omega F^-1`.
pub fn touching(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<FiniteSubset> {
    omega.product(&shape.inverse())
}

/// Window indices of `gamma F`, or `None` when the translate leaves `omega`.
fn tile_indices(omega: &FiniteSubset, shape: &FiniteSubset, gamma: &GroupElement, buf: &mut Vec<i64>) -> Option<Vec<usize>> {
    let group = omega.owner();
    shape
        .iter()
        .map(|f| {
            group.compose_into(gamma.coords(), f.coords(), buf);
            omega.index_of_coords(buf)
        })
        .collect()
}

/// Splits `omega F^-1` into translates inside `omega` (with their window
/// indices) and boundary translates.
fn split_touching(
    omega: &FiniteSubset,
    shape: &FiniteSubset,
) -> Result<(Vec<(GroupElement, Vec<usize>)>, Vec<GroupElement>)> {
    let mut buf = Vec::new();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for g in touching(omega, shape)?.iter() {
        match tile_indices(omega, shape, g, &mut buf) {
            Some(idx) => inside.push((g.clone(), idx)),
            None => outside.push(g.clone()),
        }
    }
    Ok((inside, outside))
}

/// Translates `gamma` with `gamma F` contained in `omega`, canonical order.
pub fn inside_translates(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<Vec<GroupElement>> {
    Ok(split_touching(omega, shape)?.0.into_iter().map(|(g, _)| g).collect())
}

/// The `F`-boundary: all `gamma` whose translate `gamma F` meets both
/// `omega` and its complement.
pub fn boundary(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<FiniteSubset> {
    require_nonempty(shape, "boundary shape")?;
    let (_, outside) = split_touching(omega, shape)?;
    FiniteSubset::new(omega.owner(), outside)
}

/// Relative amenability `|boundary| / |omega|` as an exact ratio.
pub fn alpha_ratio(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<Ratio<i64>> {
    require_nonempty(omega, "window")?;
    let b = boundary(omega, shape)?;
    Ok(Ratio::new(b.len() as i64, omega.len() as i64))
}

pub fn alpha(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<f64> {
    let r = alpha_ratio(omega, shape)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

/// `omega` together with its `A`-boundary.
pub fn closure(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<FiniteSubset> {
    omega.union(&boundary(omega, shape)?)
}

/// `omega` with its `A`-boundary removed.
pub fn interior(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<FiniteSubset> {
    omega.difference(&boundary(omega, shape)?)
}

/// A maximal disjoint packing of translates of `shape` inside a window,
/// with the counting sandwich `(|Ω| - |∂_F Ω|)/|F|^2 <= |G| <= |Ω|/|F|`.
#[derive(Debug, Clone, Serialize)]
pub struct PackingResult {
    pub centers: FiniteSubset,
    pub shape: FiniteSubset,
    pub covered: FiniteSubset,
    pub window_size: usize,
    #[serde(serialize_with = "ratio_as_f64")]
    pub lower_bound: Ratio<i64>,
    #[serde(serialize_with = "ratio_as_f64")]
    pub upper_bound: Ratio<i64>,
}

fn ratio_as_f64<S: serde::Serializer>(r: &Ratio<i64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(*r.numer() as f64 / *r.denom() as f64)
}

impl PackingResult {
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    /// Checks the packing sandwich in exact integer arithmetic.
    pub fn sandwich_holds(&self) -> bool {
        let g = Ratio::from_integer(self.count() as i64);
        self.lower_bound <= g && g <= self.upper_bound
    }
}

/// Greedy maximal packing: scan candidates in canonical order and accept a
/// translate when it fits inside `omega` and misses every accepted tile.
pub fn greedy_pack(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<PackingResult> {
    require_nonempty(shape, "packing shape")?;
    let group = omega.owner();
    let mut claimed = vec![false; omega.len()];
    let mut centers = Vec::new();
    let mut covered = Vec::new();
    let (inside, outside) = split_touching(omega, shape)?;
    for (gamma, idx) in inside {
        if idx.iter().all(|&i| !claimed[i]) {
            for &i in &idx {
                claimed[i] = true;
                covered.push(omega.elements()[i].clone());
            }
            centers.push(gamma);
        }
    }
    let upper_bound = if omega.is_empty() {
        Ratio::from_integer(0)
    } else {
        Ratio::new(omega.len() as i64, shape.len() as i64)
    };
    let lower_bound = if omega.is_empty() {
        Ratio::from_integer(0)
    } else {
        let b = outside.len() as i64;
        let f = shape.len() as i64;
        Ratio::new(omega.len() as i64 - b, f * f)
    };
    Ok(PackingResult {
        centers: FiniteSubset::new(group, centers)?,
        shape: shape.clone(),
        covered: FiniteSubset::new(group, covered)?,
        window_size: omega.len(),
        lower_bound,
        upper_bound,
    })
}

/// Outcome of an ε-disjointness test.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsDisjointness {
    /// Disjoint reduced sets `F'_i ⊆ F_i` certifying ε-disjointness.
    Disjoint(Vec<FiniteSubset>),
    /// Exhaustive assignment search (at most three sets) found no witness.
    NotDisjoint,
    /// The greedy certificate failed and the family is too large to exhaust.
    GreedyUndecided,
}

impl EpsDisjointness {
    pub fn is_disjoint(&self) -> bool {
        matches!(self, EpsDisjointness::Disjoint(_))
    }
}

/// Largest family size for which exhaustive search is attempted.
pub const EXHAUSTIVE_LIMIT: usize = 3;

fn required(size: usize, eps: f64) -> usize {
    let need = (1.0 - eps) * size as f64 - COUNT_SLACK * size.max(1) as f64;
    need.ceil().max(0.0) as usize
}

/// Tests whether `sets` are ε-disjoint: there must be disjoint `F'_i ⊆ F_i`
/// with `|F'_i| >= (1 - eps)|F_i|` and the same union.
///
/// A greedy in-order assignment is tried first. When it fails and there are
/// at most [`EXHAUSTIVE_LIMIT`] sets, every split of the shared points is
/// enumerated.
pub fn is_eps_disjoint(sets: &[FiniteSubset], eps: f64) -> Result<EpsDisjointness> {
    require_eps(eps)?;
    if sets.is_empty() {
        return Ok(EpsDisjointness::Disjoint(Vec::new()));
    }
    let group = sets[0].owner().clone();
    let mut claimed: HashSet<GroupElement> = HashSet::new();
    let mut witness = Vec::with_capacity(sets.len());
    let mut greedy_ok = true;
    for set in sets {
        let reduced: Vec<GroupElement> = set.iter().filter(|g| !claimed.contains(*g)).cloned().collect();
        if reduced.len() < required(set.len(), eps) {
            greedy_ok = false;
            break;
        }
        claimed.extend(reduced.iter().cloned());
        witness.push(FiniteSubset::new(&group, reduced)?);
    }
    if greedy_ok {
        return Ok(EpsDisjointness::Disjoint(witness));
    }
    if sets.len() > EXHAUSTIVE_LIMIT {
        return Ok(EpsDisjointness::GreedyUndecided);
    }
    exhaustive_split(sets, eps)
}

/// Enumerates how many points of each membership class go to each member.
fn exhaustive_split(sets: &[FiniteSubset], eps: f64) -> Result<EpsDisjointness> {
    let group = sets[0].owner().clone();
    let mut classes: BTreeMap<u8, Vec<GroupElement>> = BTreeMap::new();
    for (i, set) in sets.iter().enumerate() {
        for g in set {
            let mask = sets
                .iter()
                .enumerate()
                .filter(|(_, s)| s.contains(g))
                .fold(0u8, |m, (j, _)| m | (1 << j));
            // register each point once, from the first set that holds it
            if mask.trailing_zeros() as usize == i {
                classes.entry(mask).or_default().push(g.clone());
            }
        }
    }
    let needs: Vec<usize> = sets.iter().map(|s| required(s.len(), eps)).collect();
    let class_list: Vec<(u8, usize)> = classes.iter().map(|(m, v)| (*m, v.len())).collect();
    let mut split = Vec::new();
    let mut totals = vec![0usize; sets.len()];
    if !search(&class_list, 0, &needs, &mut totals, &mut split) {
        return Ok(EpsDisjointness::NotDisjoint);
    }
    let mut reduced: Vec<Vec<GroupElement>> = vec![Vec::new(); sets.len()];
    for ((mask, points), counts) in classes.iter().zip(&split) {
        let members: Vec<usize> = (0..sets.len()).filter(|j| mask & (1 << j) != 0).collect();
        let mut it = points.iter();
        for (member, &count) in members.iter().zip(counts) {
            reduced[*member].extend(it.by_ref().take(count).cloned());
        }
    }
    let witness = reduced
        .into_iter()
        .map(|r| FiniteSubset::new(&group, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(EpsDisjointness::Disjoint(witness))
}

fn search(
    classes: &[(u8, usize)],
    at: usize,
    needs: &[usize],
    totals: &mut Vec<usize>,
    split: &mut Vec<Vec<usize>>,
) -> bool {
    if at == classes.len() {
        return totals.iter().zip(needs).all(|(t, n)| t >= n);
    }
    let (mask, size) = classes[at];
    let members: Vec<usize> = (0..needs.len()).filter(|j| mask & (1 << j) != 0).collect();
    let mut counts = vec![0usize; members.len()];
    let mut found = false;
    compositions(size, &mut counts, 0, &mut |parts| {
        if found {
            return;
        }
        for (m, c) in members.iter().zip(parts.iter()) {
            totals[*m] += c;
        }
        split.push(parts.to_vec());
        if search(classes, at + 1, needs, totals, split) {
            found = true;
        } else {
            split.pop();
        }
        for (m, c) in members.iter().zip(parts.iter()) {
            totals[*m] -= c;
        }
    });
    found
}

/// Calls `visit` with every way to write `remaining` as an ordered sum of
/// `parts.len()` nonnegative integers.
fn compositions(remaining: usize, parts: &mut [usize], at: usize, visit: &mut dyn FnMut(&[usize])) {
    if at + 1 == parts.len() {
        parts[at] = remaining;
        visit(parts);
        return;
    }
    for c in (0..=remaining).rev() {
        parts[at] = c;
        compositions(remaining - c, parts, at + 1, visit);
    }
}

/// One accepted tile of a quasi-tiling.
#[derive(Debug, Clone, Serialize)]
pub struct Tile {
    /// Index into the caller's shape list.
    pub shape: usize,
    pub translate: GroupElement,
    /// Points of `translate * shape` not claimed by earlier tiles.
    pub reduced: FiniteSubset,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiTiling {
    pub tiles: Vec<Tile>,
    pub uncovered: FiniteSubset,
    pub eps: f64,
    window_size: usize,
}

impl QuasiTiling {
    /// Fraction of the window covered by the tiles.
    pub fn coverage(&self) -> f64 {
        if self.window_size == 0 {
            return 0.0;
        }
        (self.window_size - self.uncovered.len()) as f64 / self.window_size as f64
    }

    pub fn reduced_tiles(&self) -> Vec<FiniteSubset> {
        self.tiles.iter().map(|t| t.reduced.clone()).collect()
    }
}

/// Greedy multi-scale ε-quasi-tiling. Shapes are processed from largest to
/// smallest; a translate is accepted when at least `(1 - eps)` of its points
/// are still unclaimed.
pub fn quasi_tile(omega: &FiniteSubset, shapes: &[FiniteSubset], eps: f64) -> Result<QuasiTiling> {
    require_eps(eps)?;
    if shapes.is_empty() {
        return Err(argument("quasi-tiling needs at least one shape"));
    }
    let group = omega.owner();
    let identity = group.identity();
    for shape in shapes {
        require_nonempty(shape, "tile shape")?;
        if !shape.contains(&identity) {
            return Err(argument("every tile shape must contain the identity"));
        }
    }
    let mut order: Vec<usize> = (0..shapes.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(shapes[i].len()));

    let mut claimed = vec![false; omega.len()];
    let mut tiles = Vec::new();
    for s in order {
        let shape = &shapes[s];
        let need = required(shape.len(), eps);
        for gamma in inside_translates(omega, shape)? {
            let free: Vec<usize> = shape
                .iter()
                .filter_map(|f| omega.index_of(&group.compose_unchecked(&gamma, f)))
                .filter(|&i| !claimed[i])
                .collect();
            if free.len() >= need && !free.is_empty() {
                for &i in &free {
                    claimed[i] = true;
                }
                let reduced = FiniteSubset::new(group, free.iter().map(|&i| omega.elements()[i].clone()))?;
                tiles.push(Tile {
                    shape: s,
                    translate: gamma,
                    reduced,
                });
            }
        }
    }
    let uncovered = FiniteSubset::new(
        group,
        omega
            .iter()
            .zip(&claimed)
            .filter(|(_, c)| !**c)
            .map(|(g, _)| g.clone()),
    )?;
    Ok(QuasiTiling {
        tiles,
        uncovered,
        eps,
        window_size: omega.len(),
    })
}

/// JSON-facing summary of a packing or quasi-tiling run.
#[derive(Debug, Clone, Serialize)]
pub struct TilingReport {
    pub shapes: Vec<FiniteSubset>,
    pub centers: Vec<GroupElement>,
    pub coverage: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
}

impl From<&PackingResult> for TilingReport {
    fn from(p: &PackingResult) -> Self {
        let coverage = if p.window_size == 0 {
            0.0
        } else {
            p.covered.len() as f64 / p.window_size as f64
        };
        TilingReport {
            shapes: vec![p.shape.clone()],
            centers: p.centers.elements().to_vec(),
            coverage,
            lower_bound: Some(*p.lower_bound.numer() as f64 / *p.lower_bound.denom() as f64),
            upper_bound: Some(*p.upper_bound.numer() as f64 / *p.upper_bound.denom() as f64),
        }
    }
}

impl QuasiTiling {
    pub fn report(&self, shapes: &[FiniteSubset]) -> TilingReport {
        TilingReport {
            shapes: shapes.to_vec(),
            centers: self.tiles.iter().map(|t| t.translate.clone()).collect(),
            coverage: self.coverage(),
            lower_bound: None,
            upper_bound: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;

    fn z() -> GroupSpec {
        GroupSpec::integers()
    }

    fn iv(a: i64, b: i64) -> FiniteSubset {
        FiniteSubset::interval(&z(), a, b).unwrap()
    }

    #[test]
    fn boundary_of_interval() {
        let b = boundary(&iv(0, 10), &iv(0, 2)).unwrap();
        assert_eq!(b, FiniteSubset::from_coords(&z(), [[-1], [9]]).unwrap());

        let b = boundary(&iv(0, 10), &iv(0, 10)).unwrap();
        assert_eq!(b.len(), 18);
        assert_eq!(b, iv(-9, 0).union(&iv(1, 10)).unwrap());

        let single = FiniteSubset::from_coords(&z(), [[0]]).unwrap();
        assert!(boundary(&iv(3, 17), &single).unwrap().is_empty());
        assert!(boundary(&iv(0, 3), &FiniteSubset::empty(&z())).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert!((alpha(&iv(0, 10), &iv(0, 2)).unwrap() - 0.2).abs() < 1e-15);
        let single = FiniteSubset::from_coords(&z(), [[0]]).unwrap();
        assert_eq!(alpha(&iv(0, 10), &single).unwrap(), 0.0);
        assert!(alpha(&FiniteSubset::empty(&z()), &single).is_err());

        let z2 = GroupSpec::lattice(2).unwrap();
        let step = FiniteSubset::from_coords(&z2, [[0, 0], [1, 0]]).unwrap();
        for n in [3i64, 5, 8] {
            let omega = FiniteSubset::from_box(&z2, &[(0, n), (0, n)]);
            let a = alpha_ratio(&omega, &step).unwrap();
            assert_eq!(a, Ratio::new(2 * n, n * n));
        }
    }

    #[test]
    fn closure_and_interior() {
        let a = iv(0, 2);
        assert_eq!(closure(&iv(0, 10), &a).unwrap(), iv(-1, 10));
        assert_eq!(interior(&iv(0, 10), &a).unwrap(), iv(0, 9));
        let single = FiniteSubset::from_coords(&z(), [[0]]).unwrap();
        assert_eq!(closure(&iv(0, 10), &single).unwrap(), iv(0, 10));
        assert_eq!(interior(&iv(0, 10), &single).unwrap(), iv(0, 10));
        assert!(closure(&iv(0, 10), &FiniteSubset::empty(&z())).is_err());
    }

    #[test]
    fn cyclic_window_has_no_boundary() {
        let z6 = GroupSpec::cyclic(6).unwrap();
        let omega = z6.folner_window(1).unwrap();
        let f = FiniteSubset::from_coords(&z6, [[0], [1], [2]]).unwrap();
        assert!(boundary(&omega, &f).unwrap().is_empty());
        assert_eq!(greedy_pack(&omega, &f).unwrap().count(), 2);
    }

    #[test]
    fn greedy_pack_examples() {
        let p = greedy_pack(&iv(0, 10), &iv(0, 2)).unwrap();
        assert_eq!(p.count(), 5);
        assert_eq!(p.covered, iv(0, 10));
        assert_eq!(p.upper_bound, Ratio::from_integer(5));
        assert_eq!(p.lower_bound, Ratio::from_integer(2));
        assert!(p.sandwich_holds());

        let single = FiniteSubset::from_coords(&z(), [[0]]).unwrap();
        assert_eq!(greedy_pack(&iv(0, 13), &single).unwrap().count(), 13);

        // shapes that do not fit give an empty, still legal, packing
        let p = greedy_pack(&iv(0, 3), &iv(0, 5)).unwrap();
        assert_eq!(p.count(), 0);
        assert!(p.sandwich_holds());
    }

    #[test]
    fn eps_disjoint_examples() {
        let one = is_eps_disjoint(&[iv(0, 10)], 0.1).unwrap();
        assert_eq!(one, EpsDisjointness::Disjoint(vec![iv(0, 10)]));

        match is_eps_disjoint(&[iv(0, 10), iv(9, 19)], 0.1).unwrap() {
            EpsDisjointness::Disjoint(w) => assert_eq!(w[1], iv(10, 19)),
            other => panic!("expected a witness, got {other:?}"),
        }

        // overlap of 5 points cannot be split so both keep 9 of 10
        assert_eq!(
            is_eps_disjoint(&[iv(0, 10), iv(5, 15)], 0.1).unwrap(),
            EpsDisjointness::NotDisjoint
        );
        assert!(is_eps_disjoint(&[iv(0, 10)], 0.0).is_err());
        assert!(is_eps_disjoint(&[iv(0, 10)], 1.0).is_err());
    }

    #[test]
    fn exhaustive_finds_witness_greedy_misses() {
        // greedy gives the middle set to nobody; a balanced split works
        let sets = [iv(0, 4), iv(2, 6), iv(4, 8)];
        let d = is_eps_disjoint(&sets, 0.5).unwrap();
        let EpsDisjointness::Disjoint(w) = d else {
            panic!("expected witness");
        };
        for (r, s) in w.iter().zip(&sets) {
            assert!(r.is_subset(s));
            assert!(r.len() >= 2);
        }
        assert!(w[0].is_disjoint(&w[1]) && w[1].is_disjoint(&w[2]) && w[0].is_disjoint(&w[2]));
    }

    #[test]
    fn large_families_report_undecided() {
        let sets = [iv(0, 4), iv(1, 5), iv(2, 6), iv(3, 7)];
        assert_eq!(
            is_eps_disjoint(&sets, 0.1).unwrap(),
            EpsDisjointness::GreedyUndecided
        );
    }

    #[test]
    fn quasi_tile_examples() {
        // a one-point overlap keeps 9 of 10 points, so the greedy scan
        // accepts translates 0, 9, 18, ..., 81 and then 90
        let q = quasi_tile(&iv(0, 100), &[iv(0, 10)], 0.1).unwrap();
        assert_eq!(q.tiles.len(), 11);
        assert_eq!(q.tiles[1].translate.coords(), &[9]);
        assert!(q.uncovered.is_empty());
        assert_eq!(q.coverage(), 1.0);

        let single = FiniteSubset::from_coords(&z(), [[0]]).unwrap();
        let q = quasi_tile(&iv(0, 37), &[single], 0.1).unwrap();
        assert_eq!(q.tiles.len(), 37);
        assert_eq!(q.coverage(), 1.0);

        let q = quasi_tile(&iv(0, 100), &[iv(0, 7)], 0.1).unwrap();
        assert_eq!(q.tiles.len(), 14);
        assert!((q.coverage() - 0.98).abs() < 1e-12);
        assert_eq!(q.uncovered, iv(98, 100));
    }

    #[test]
    fn quasi_tile_multiscale_is_eps_disjoint() {
        let shapes = [iv(0, 3), iv(0, 11), iv(0, 5)];
        let q = quasi_tile(&iv(0, 97), &shapes, 0.2).unwrap();
        // the largest shape is tiled first
        assert_eq!(q.tiles[0].shape, 1);
        let full: Vec<FiniteSubset> = q
            .tiles
            .iter()
            .map(|t| shapes[t.shape].translate(&t.translate).unwrap())
            .collect();
        assert!(is_eps_disjoint(&full, 0.2).unwrap().is_disjoint());
        for (t, f) in q.tiles.iter().zip(&full) {
            assert!(t.reduced.is_subset(f));
        }
    }

    #[test]
    fn quasi_tile_rejects_bad_input() {
        assert!(quasi_tile(&iv(0, 10), &[], 0.1).is_err());
        assert!(quasi_tile(&iv(0, 10), &[iv(1, 3)], 0.1).is_err());
        assert!(quasi_tile(&iv(0, 10), &[iv(0, 3)], 1.5).is_err());
    }

    #[test]
    fn reports_serialize() {
        let p = greedy_pack(&iv(0, 10), &iv(0, 2)).unwrap();
        let json = serde_json::to_value(TilingReport::from(&p)).unwrap();
        assert_eq!(json["centers"].as_array().unwrap().len(), 5);
        let q = quasi_tile(&iv(0, 20), &[iv(0, 4)], 0.1).unwrap();
        let json = serde_json::to_value(q.report(&[iv(0, 4)])).unwrap();
        assert_eq!(json["coverage"].as_f64().unwrap(), 1.0);
    }
}
