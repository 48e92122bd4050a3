//! Executable property suite over the default scenario registry.

use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::*;
use crate::error::Result;
use crate::groups::{FiniteSubset, GroupElement, GroupSpec};
use crate::linalg::{block_norm, conjugate};
use crate::spaces::{
    fourier_oracle_dim, inner_window_model, outer_window_model, reduce_spec, ConvolutionKernel, Field, FourierMode,
    Generator, SubspaceSpec,
};
use crate::tiling::{alpha, alpha_ratio, greedy_pack, inside_translates, is_eps_disjoint, quasi_tile, EpsDisjointness};
use crate::widths::{
    kernel_defect_check, ldim_from_sigma, mazur, nearest_point, operator_norm, quartet_from_sigma, BodyAnalysis,
    DualityMap, Feasible, LdimBracket, SolverSettings, Width,
};

pub const CHECK_GROUPS: [&str; 10] = [
    "groups",
    "packing",
    "widths",
    "young",
    "kernel_defect",
    "kkt",
    "positivity",
    "dimension",
    "illustrations",
    "approximate_units",
];

fn default_oracle_window() -> usize {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Check groups to run; empty runs all of them.
    #[serde(default)]
    pub only: Vec<String>,
    /// Duality map used by the projection certificates.
    #[serde(default)]
    pub duality: DualityMap,
    /// Window index for the Fourier oracle and additivity checks.
    #[serde(default = "default_oracle_window")]
    pub oracle_window: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            only: Vec::new(),
            duality: DualityMap::Mazur,
            oracle_window: default_oracle_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub group: String,
    pub name: String,
    /// The property under test, in words.
    pub about: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub groups: Vec<String>,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn failed(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: usize,
    first: Option<String>,
    notes: Vec<String>,
}

impl Tally {
    fn case(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(msg());
            }
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn absorb(&mut self, other: Tally) {
        self.cases += other.cases;
        self.failures += other.failures;
        if self.first.is_none() {
            self.first = other.first;
        }
        self.notes.extend(other.notes);
    }
}

struct Ctx<'a> {
    seed: u64,
    config: &'a SuiteConfig,
    group: &'static str,
    out: Vec<CheckOutcome>,
}

impl Ctx<'_> {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn settings(&self) -> SolverSettings {
        SolverSettings {
            duality: self.config.duality,
            ..SolverSettings::default()
        }
    }

    fn check(&mut self, name: &str, about: &str, f: impl FnOnce(&mut Tally) -> Result<()>) {
        let mut t = Tally::default();
        let run = catch_unwind(AssertUnwindSafe(|| f(&mut t)));
        let error = match run {
            Ok(Ok(())) => None,
            Ok(Err(e)) => Some(format!("error: {e}")),
            Err(panic) => Some(format!(
                "panic: {}",
                panic
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            )),
        };
        let passed = error.is_none() && t.failures == 0;
        let detail = match (&error, &t.first) {
            (Some(e), _) => e.clone(),
            (None, Some(f)) => format!("{} of {} cases failed; first: {f}", t.failures, t.cases),
            (None, None) => {
                let mut s = format!("{} cases", t.cases);
                for n in &t.notes {
                    s.push_str("; ");
                    s.push_str(n);
                }
                s
            }
        };
        self.out.push(CheckOutcome {
            group: self.group.to_string(),
            name: name.to_string(),
            about: about.to_string(),
            passed,
            cases: t.cases,
            failures: t.failures + usize::from(error.is_some()),
            detail,
        });
    }
}

/// Runs the selected check groups. Failures are collected, never raised;
/// the only error is an unknown group name in `only`.
pub fn property_suite(config: &SuiteConfig, seed: u64) -> Result<SuiteReport> {
    for g in &config.only {
        if !CHECK_GROUPS.contains(&g.as_str()) {
            return Err(argument(format!(
                "unknown check group {g:?}; known groups: {}",
                CHECK_GROUPS.join(", ")
            )));
        }
    }
    let selected: Vec<&'static str> = CHECK_GROUPS
        .iter()
        .copied()
        .filter(|g| config.only.is_empty() || config.only.iter().any(|o| o == g))
        .collect();
    let mut checks = Vec::new();
    for group in &selected {
        let mut ctx = Ctx {
            seed,
            config,
            group,
            out: Vec::new(),
        };
        match *group {
            "groups" => groups_checks(&mut ctx),
            "packing" => packing_checks(&mut ctx),
            "widths" => widths_checks(&mut ctx),
            "young" => young_checks(&mut ctx),
            "kernel_defect" => kernel_defect_checks(&mut ctx),
            "kkt" => kkt_checks(&mut ctx),
            "positivity" => positivity_checks(&mut ctx),
            "dimension" => dimension_checks(&mut ctx),
            "illustrations" => illustration_checks(&mut ctx),
            "approximate_units" => approx_unit_checks(&mut ctx),
            _ => unreachable!("validated above"),
        }
        checks.extend(ctx.out);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        seed,
        groups: selected.iter().map(|s| s.to_string()).collect(),
        checks,
        passed,
    })
}

fn z() -> GroupSpec {
    GroupSpec::integers()
}

fn interval(a: i64, b: i64) -> FiniteSubset {
    FiniteSubset::interval(&z(), a, b).expect("valid interval")
}

fn difference_kernel() -> ConvolutionKernel {
    ConvolutionKernel::scalar(&z(), &[(0, 1.0), (1, -1.0)]).expect("valid kernel")
}

/// `y ↦ y₁ + y₂(· − 1)` from `V = K²` to `K`: generic 1×2 symbol.
pub(crate) fn generic_row_kernel() -> ConvolutionKernel {
    ConvolutionKernel::new(
        &z(),
        vec![
            (GroupElement::integer(0), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
            (GroupElement::integer(1), DMatrix::from_row_slice(1, 2, &[0.0, 1.0])),
        ],
    )
    .expect("valid kernel")
}

fn scenario_specs() -> Vec<(&'static str, SubspaceSpec)> {
    vec![
        ("conv_image", SubspaceSpec::ConvImage(difference_kernel())),
        ("conv_kernel", SubspaceSpec::ConvKernel(generic_row_kernel())),
        (
            "cyclic",
            SubspaceSpec::CyclicTranslates(Generator::truncated_geometric(2, 5, 0.1).expect("valid generator")),
        ),
        ("ker_periodization", SubspaceSpec::KerPeriodization { period: 2 }),
    ]
}

fn sorted_sigma(mut s: Vec<f64>) -> Vec<f64> {
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

fn width_value(w: Width) -> usize {
    match w {
        Width::Exact { value } => value,
        Width::Bracket { hi, .. } => hi,
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    loop {
        let m = random_matrix(rng, n, k);
        let qr = m.qr();
        let r = qr.r();
        if (0..k).all(|i| r[(i, i)].abs() > 1e-6) {
            return qr.q().columns(0, k).into_owned();
        }
    }
}

// ---------------------------------------------------------------- groups

fn groups_checks(ctx: &mut Ctx) {
    let groups = [
        z(),
        GroupSpec::lattice(3).expect("valid"),
        GroupSpec::cyclic(7).expect("valid"),
        GroupSpec::product(vec![z(), GroupSpec::cyclic(3).expect("valid")]).expect("valid"),
        GroupSpec::product(vec![GroupSpec::cyclic(4).expect("valid"), GroupSpec::cyclic(6).expect("valid")])
            .expect("valid"),
    ];
    let mut rng = ctx.rng(1);
    ctx.check("group-axioms", "associativity, identity, inverses and commutativity", |t| {
        for g in &groups {
            let e = g.identity();
            for _ in 0..200 {
                let mut draw = || g.element((0..g.arity()).map(|_| rng.gen_range(-20..=20)).collect::<Vec<i64>>());
                let (a, b, c) = (draw()?, draw()?, draw()?);
                let left = g.compose(&g.compose(&a, &b)?, &c)?;
                let right = g.compose(&a, &g.compose(&b, &c)?)?;
                t.case(left == right, || format!("{g}: ({a}{b}){c} != {a}({b}{c})"));
                t.case(g.compose(&a, &e)? == a, || format!("{g}: {a}e != {a}"));
                t.case(g.compose(&a, &g.invert(&a)?)? == e, || format!("{g}: {a} times its inverse is not e"));
                t.case(g.compose(&a, &b)? == g.compose(&b, &a)?, || format!("{g}: {a}, {b} do not commute"));
            }
        }
        Ok(())
    });
    ctx.check("folner-boundary-decay", "relative boundaries of the windows shrink", |t| {
        for g in &groups {
            let radius: Vec<(i64, i64)> = (0..g.arity()).map(|_| (-1, 2)).collect();
            let shape = FiniteSubset::from_box(g, &radius);
            let sizes: &[usize] = match g.arity() {
                1 => &[4, 16, 64, 256],
                2 => &[4, 16, 64, 128],
                _ => &[4, 8, 16, 24],
            };
            let alphas: Vec<f64> = sizes
                .iter()
                .map(|&i| alpha(&g.folner_window(i)?, &shape))
                .collect::<Result<_>>()?;
            let (first, last) = (alphas[0], alphas[alphas.len() - 1]);
            let ok = if g.is_finite() {
                alphas.iter().all(|&a| a == 0.0)
            } else {
                alphas.windows(2).all(|w| w[1] < w[0]) && (g.arity() > 2 || last < 0.1 * first)
            };
            t.case(ok, || format!("{g}: α over windows {sizes:?} = {alphas:?}"));
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- packing

fn packing_shapes(d: usize) -> Vec<FiniteSubset> {
    let g = if d == 1 { z() } else { GroupSpec::lattice(d).expect("valid") };
    let pts = |v: &[&[i64]]| FiniteSubset::from_coords(&g, v.iter().map(|c| c.to_vec())).expect("valid");
    if d == 1 {
        vec![
            pts(&[&[0]]),
            pts(&[&[0], &[1], &[2]]),
            pts(&[&[0], &[2], &[5]]),
            pts(&[&[-1], &[0], &[1]]),
            interval(0, 7),
        ]
    } else {
        vec![
            pts(&[&[0, 0]]),
            FiniteSubset::from_box(&g, &[(0, 2), (0, 2)]),
            pts(&[&[0, 0], &[1, 0], &[0, 1]]),
            FiniteSubset::from_box(&g, &[(0, 3), (0, 1)]),
        ]
    }
}

/// Packing count sandwich for one box, recomputed from raw counts.
fn sandwich_case(omega: &FiniteSubset, shape: &FiniteSubset) -> Result<std::result::Result<(), String>> {
    let pack = greedy_pack(omega, shape)?;
    let n = pack.count() as i64;
    let (w, f) = (omega.len() as i64, shape.len() as i64);
    let a = alpha_ratio(omega, shape)?;
    let boundary = (a * w).to_integer();
    if n * f > w || n * f * f < w - boundary {
        return Ok(Err(format!("count {n} outside [{}, {}]", (w - boundary) / (f * f), w / f)));
    }
    let group = omega.owner();
    let mut claimed = vec![false; omega.len()];
    let cells = |c: &GroupElement| -> Result<Vec<Option<usize>>> {
        shape.iter().map(|f| Ok(omega.index_of(&group.compose(c, f)?))).collect()
    };
    for c in pack.centers.iter() {
        for i in cells(c)? {
            match i {
                Some(i) if !claimed[i] => claimed[i] = true,
                _ => return Ok(Err(format!("translate at {c} overlaps or leaves the window"))),
            }
        }
    }
    for c in inside_translates(omega, shape)? {
        if cells(&c)?.into_iter().all(|i| i.is_some_and(|i| !claimed[i])) {
            return Ok(Err(format!("translate at {c} still fits: packing not maximal")));
        }
    }
    Ok(Ok(()))
}

/// Independent feasibility oracle for ε-disjointness: each set needs
/// `⌈(1−ε)|F_i|⌉` private points, found by bipartite matching of set slots
/// to points. Unmatched points can be handed to any set containing them.
pub(crate) fn eps_disjoint_by_matching(sets: &[FiniteSubset], eps: f64) -> bool {
    let mut points: Vec<GroupElement> = sets.iter().flat_map(|s| s.iter().cloned()).collect();
    points.sort();
    points.dedup();
    let mut slots: Vec<usize> = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        let need = ((1.0 - eps) * s.len() as f64 - 1e-9 * s.len() as f64).ceil().max(0.0) as usize;
        slots.extend(std::iter::repeat(i).take(need));
    }
    let adj: Vec<Vec<usize>> = slots
        .iter()
        .map(|&i| (0..points.len()).filter(|&j| sets[i].contains(&points[j])).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; points.len()];
    fn augment(s: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[s] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].map_or(true, |o| augment(o, adj, seen, owner)) {
                owner[j] = Some(s);
                return true;
            }
        }
        false
    }
    (0..slots.len()).all(|s| {
        let mut seen = vec![false; points.len()];
        augment(s, &adj, &mut seen, &mut owner)
    })
}

fn witness_valid(sets: &[FiniteSubset], reduced: &[FiniteSubset], eps: f64) -> bool {
    if sets.len() != reduced.len() {
        return false;
    }
    let mut union = FiniteSubset::empty(&z());
    let mut target = FiniteSubset::empty(&z());
    for (f, r) in sets.iter().zip(reduced) {
        if !r.is_subset(f) || !r.is_disjoint(&union) {
            return false;
        }
        if (r.len() as f64) < (1.0 - eps) * f.len() as f64 - 1e-9 * f.len() as f64 {
            return false;
        }
        union = union.union(r).expect("same group");
        target = target.union(f).expect("same group");
    }
    union == target
}

fn packing_checks(ctx: &mut Ctx) {
    ctx.check("packing-sandwich", "greedy packings are maximal and obey the count sandwich", |t| {
        let mut boxes: Vec<(usize, Vec<(i64, i64)>)> = (8..=64).map(|n| (1, vec![(0, n)])).collect();
        for a in 8..=64 {
            for b in 8..=64 {
                boxes.push((2, vec![(0, a), (0, b)]));
            }
        }
        let shapes = [packing_shapes(1), packing_shapes(2)];
        let results: Vec<Result<Tally>> = boxes
            .par_iter()
            .map(|(d, ranges)| {
                let g = if *d == 1 { z() } else { GroupSpec::lattice(2)? };
                let omega = FiniteSubset::from_box(&g, ranges);
                let mut local = Tally::default();
                for shape in &shapes[d - 1] {
                    match sandwich_case(&omega, shape)? {
                        Ok(()) => local.case(true, String::new),
                        Err(m) => local.case(false, || format!("box {ranges:?}: {m}")),
                    }
                }
                Ok(local)
            })
            .collect();
        for r in results {
            match r {
                Ok(l) => t.absorb(l),
                Err(e) => t.case(false, || e.to_string()),
            }
        }
        Ok(())
    });
    ctx.check("quasi-tiling-coverage", "single-shape quasi-tilings cover at least ε(1 − α)", |t| {
        let z2 = GroupSpec::lattice(2)?;
        let mut runs: Vec<(FiniteSubset, FiniteSubset)> = Vec::new();
        for n in [20, 37, 64, 100, 128] {
            for k in [1, 3, 5, 10] {
                runs.push((interval(0, n), interval(0, k)));
            }
        }
        for n in [12, 24] {
            for k in [2, 3] {
                runs.push((
                    FiniteSubset::from_box(&z2, &[(0, n), (0, n)]),
                    FiniteSubset::from_box(&z2, &[(0, k), (0, k)]),
                ));
            }
        }
        for (omega, shape) in &runs {
            let a = alpha(omega, shape)?;
            for eps in [0.1, 0.25, 0.5] {
                let tiling = quasi_tile(omega, std::slice::from_ref(shape), eps)?;
                let cov = tiling.coverage();
                t.case(cov >= eps * (1.0 - a) - 1e-12, || {
                    format!("|Ω| = {}, |F| = {}, ε = {eps}: coverage {cov} < {}", omega.len(), shape.len(), eps * (1.0 - a))
                });
                let reduced = tiling.reduced_tiles();
                let mut seen = FiniteSubset::empty(omega.owner());
                let mut ok = true;
                for (tile, r) in tiling.tiles.iter().zip(&reduced) {
                    let full = shape.translate(&tile.translate)?;
                    ok &= full.is_subset(omega) && r.is_subset(&full) && r.is_disjoint(&seen);
                    ok &= r.len() as f64 >= (1.0 - eps) * full.len() as f64 - 1e-9 * full.len() as f64;
                    seen = seen.union(r)?;
                }
                t.case(ok, || format!("|Ω| = {}, ε = {eps}: tiles not ε-disjoint inside Ω", omega.len()));
            }
        }
        Ok(())
    });
    let mut rng = ctx.rng(2);
    ctx.check("eps-disjoint-oracle", "ε-disjointness agrees with a matching oracle on small families", |t| {
        for case in 0..400 {
            let width = rng.gen_range(4..=20i64);
            let count = rng.gen_range(1..=3);
            let eps = [0.05, 0.1, 0.2, 0.3, 0.5][case % 5];
            let sets: Vec<FiniteSubset> = (0..count)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        let a = rng.gen_range(0..width);
                        let b = rng.gen_range(a + 1..=width);
                        interval(a, b)
                    } else {
                        let keep = rng.gen_range(0.3..0.9);
                        let pts: Vec<GroupElement> =
                            (0..width).filter(|_| rng.gen_bool(keep)).map(GroupElement::integer).collect();
                        let pts = if pts.is_empty() { vec![GroupElement::integer(0)] } else { pts };
                        FiniteSubset::new(&z(), pts).expect("valid")
                    }
                })
                .collect();
            let oracle = eps_disjoint_by_matching(&sets, eps);
            let got = is_eps_disjoint(&sets, eps)?;
            let agree = match &got {
                EpsDisjointness::Disjoint(r) => oracle && witness_valid(&sets, r, eps),
                EpsDisjointness::NotDisjoint => !oracle,
                EpsDisjointness::GreedyUndecided => false,
            };
            t.case(agree, || format!("sets {sets:?}, ε = {eps}: oracle {oracle}, got {got:?}"));
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- widths

fn ellipsoids(rng: &mut ChaCha8Rng, count: usize) -> Vec<Vec<f64>> {
    const TIES: [f64; 6] = [0.025, 0.05, 0.25, 0.5, 0.95, 1.0];
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=12);
            sorted_sigma(
                (0..n)
                    .map(|_| {
                        if rng.gen_bool(0.2) {
                            TIES[rng.gen_range(0..TIES.len())]
                        } else {
                            rng.gen_range(0.01..2.2)
                        }
                    })
                    .collect(),
            )
        })
        .collect()
}

const ELLIPSOID_EPS: [f64; 8] = [1.9, 1.5, 1.0, 0.5, 0.25, 0.1, 0.05, 0.02];

/// Diameter of `diag(σ)B ∩ span(B)` for an orthonormal basis `B`.
fn section_diameter(sigma: &[f64], basis: &DMatrix<f64>) -> f64 {
    let inv = DMatrix::from_diagonal(&DVector::from_iterator(sigma.len(), sigma.iter().map(|s| 1.0 / (s * s))));
    let m = basis.transpose() * inv * basis;
    let lmin = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    2.0 / lmin.sqrt()
}

fn bracket_sequence(body: &BodyAnalysis, eps: &[f64]) -> Vec<LdimBracket> {
    eps.iter().map(|&e| body.bracket(e)).collect()
}

fn widths_checks(ctx: &mut Ctx) {
    let mut rng = ctx.rng(3);
    let bodies = ellipsoids(&mut rng, 200);
    ctx.check("width-chain", "bdim at 2ε ≤ ldim at ε ≤ cdim at ε/2 on ellipsoids", |t| {
        for s in &bodies {
            for &e in &ELLIPSOID_EPS {
                let b = width_value(quartet_from_sigma(s, 2.0 * e).bdim);
                let l = width_value(quartet_from_sigma(s, e).ldim);
                let c = width_value(quartet_from_sigma(s, e / 2.0).cdim);
                t.case(b <= l && l <= c, || format!("σ = {s:?}, ε = {e}: {b}, {l}, {c}"));
            }
        }
        Ok(())
    });
    let seed = ctx.seed;
    ctx.check("sampling-oracle", "random cuts of the certified codimension never beat the certificate", |t| {
        let results: Vec<Tally> = bodies
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1000 + i as u64);
                let mut local = Tally::default();
                let n = s.len();
                for &e in &ELLIPSOID_EPS {
                    let k = ldim_from_sigma(s, e);
                    let cert = if k < n { 2.0 * s[k] } else { 0.0 };
                    local.case(cert <= e, || format!("σ = {s:?}, ε = {e}: certificate {cert} above ε"));
                    if k == n {
                        continue;
                    }
                    for _ in 0..100 {
                        let basis = orthonormal(&mut rng, n, n - k);
                        let d = section_diameter(s, &basis);
                        local.case(d >= cert - 1e-9, || {
                            format!("σ = {s:?}, ε = {e}: sampled cut diameter {d} below certificate {cert}")
                        });
                    }
                }
                local
            })
            .collect();
        results.into_iter().for_each(|l| t.absorb(l));
        Ok(())
    });
    let eps = [1.9, 1.5, 1.0, 0.5, 0.25, 0.1];
    ctx.check("ldim-bracket-sanity", "window brackets are ordered, monotone in ε and exact at p = 2", |t| {
        for (name, spec) in scenario_specs() {
            for p in [1.0, 1.5, 2.0, 3.0] {
                for m in [8, 16, 24] {
                    for model in [inner_window_model(&spec, &interval(0, m), p)?, outer_window_model(&spec, &interval(0, m), p)?] {
                        let body = BodyAnalysis::new(&model);
                        let seq = bracket_sequence(&body, &eps);
                        for (j, b) in seq.iter().enumerate() {
                            t.case(b.lo <= b.hi && b.hi <= body.rank(), || {
                                format!("{name} p = {p} |Ω| = {m} ε = {}: {b:?} rank {}", eps[j], body.rank())
                            });
                            if p == 2.0 {
                                t.case(b.lo == b.hi, || format!("{name} |Ω| = {m}: inexact at p = 2: {b:?}"));
                            }
                        }
                        for w in seq.windows(2) {
                            t.case(w[1].lo >= w[0].lo && w[1].hi >= w[0].hi, || {
                                format!("{name} p = {p} |Ω| = {m}: {:?} then {:?} as ε shrinks", w[0], w[1])
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    });
    ctx.check("inclusion-monotone", "the inner body never out-measures the outer body", |t| {
        for (name, spec) in scenario_specs() {
            for p in [1.0, 1.5, 2.0, 3.0] {
                let omega = interval(0, 16);
                let inner = BodyAnalysis::new(&inner_window_model(&spec, &omega, p)?);
                let outer = BodyAnalysis::new(&outer_window_model(&spec, &omega, p)?);
                for &e in &eps {
                    let (a, b) = (inner.bracket(e), outer.bracket(e));
                    t.case(a.lo <= b.hi, || format!("{name} p = {p} ε = {e}: inner {a:?}, outer {b:?}"));
                }
            }
        }
        Ok(())
    });
    let mut rng = ctx.rng(4);
    ctx.check("fixed-vector-frobenius", "a map fixing k orthonormal vectors has squared Frobenius norm ≥ k", |t| {
        for _ in 0..100 {
            let n = rng.gen_range(2..=16);
            let k = rng.gen_range(1..=n);
            let e = orthonormal(&mut rng, n, k);
            let p = &e * e.transpose();
            let m = &p + random_matrix(&mut rng, n, n) * (DMatrix::identity(n, n) - &p);
            let fixed = (&m * &e - &e).amax();
            let fro = m.norm_squared();
            t.case(fixed < 1e-10 && fro >= k as f64 - 1e-9, || format!("n = {n}, k = {k}: ‖M‖² = {fro}"));
        }
        Ok(())
    });
    let mut rng = ctx.rng(5);
    ctx.check("mazur-pairing", "the Mazur image norms the vector", |t| {
        for i in 0..200 {
            let p = [1.25, 1.5, 3.0, 4.0][i % 4];
            let n = rng.gen_range(1..=16);
            let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let m = mazur(&f, p)?;
            let pair: f64 = m.iter().zip(&f).map(|(a, b)| a * b).sum();
            let np = block_norm(&f, 1, p);
            let ok = (pair - np.powf(p)).abs() <= 1e-10 * np.powf(p).max(1.0)
                && (block_norm(&m, 1, conjugate(p)) - np.powf(p - 1.0)).abs() <= 1e-10 * np.powf(p - 1.0).max(1.0);
            t.case(ok, || format!("p = {p}, f = {f:?}"));
        }
        Ok(())
    });
    let mut rng = ctx.rng(6);
    ctx.check("operator-norm-bracket", "operator norm brackets contain every sampled ratio", |t| {
        let pairs = [(1.0, 2.0), (2.0, 2.0), (f64::INFINITY, 1.0), (3.0, 1.5), (1.5, 3.0), (4.0, 4.0)];
        for i in 0..60 {
            let (p, q) = pairs[i % pairs.len()];
            let (r, c) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
            let m = random_matrix(&mut rng, r, c);
            let norm = operator_norm(&m, p, q, i as u64)?;
            t.case(norm.lo() <= norm.hi() * (1.0 + 1e-12), || format!("p = {p}, q = {q}: {norm:?}"));
            for _ in 0..200 {
                let x = DVector::from_fn(m.ncols(), |_, _| rng.gen_range(-1.0..1.0));
                let ratio = block_norm((&m * &x).as_slice(), 1, q) / block_norm(x.as_slice(), 1, p);
                t.case(ratio <= norm.hi() * (1.0 + 1e-9), || format!("p = {p}, q = {q}: ratio {ratio} above {norm:?}"));
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- young

fn young_checks(ctx: &mut Ctx) {
    let mut rng = ctx.rng(7);
    ctx.check("young-inequality", "‖h*y‖_p ≤ ‖h‖₁‖y‖_p", |t| {
        let z2 = GroupSpec::lattice(2)?;
        for i in 0..500 {
            let p = [1.0, 1.5, 2.0, 3.0, f64::INFINITY][i % 5];
            let group = if i % 5 == 4 && i % 2 == 0 { z2.clone() } else { z() };
            let (din, dout) = if i % 7 == 0 { (2, 3) } else { (1, 1) };
            let coord = |rng: &mut ChaCha8Rng| {
                group
                    .element((0..group.arity()).map(|_| rng.gen_range(-3..=3)).collect::<Vec<i64>>())
                    .expect("valid")
            };
            let entries: Vec<(GroupElement, DMatrix<f64>)> = (0..rng.gen_range(1..=5))
                .map(|_| (coord(&mut rng), random_matrix(&mut rng, dout, din)))
                .collect();
            let mut merged: std::collections::BTreeMap<GroupElement, DMatrix<f64>> = Default::default();
            for (g, b) in entries {
                *merged.entry(g).or_insert_with(|| DMatrix::zeros(dout, din)) += b;
            }
            let h = ConvolutionKernel::new(&group, merged.into_iter().collect())?;
            let mut y = Field::zeros(&group, din);
            for _ in 0..rng.gen_range(1..=8) {
                let g = coord(&mut rng);
                y.add_at(g, &DVector::from_fn(din, |_, _| rng.gen_range(-1.0..1.0)))?;
            }
            let lhs = h.convolve(&y)?.norm(p);
            let rhs = h.l1_norm() * y.norm(p);
            t.case(lhs <= rhs * (1.0 + 1e-12) + 1e-15, || format!("p = {p}: {lhs} > {rhs}"));
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- kernel defect

fn defect_matrix(rng: &mut ChaCha8Rng, n: usize, family: usize) -> DMatrix<f64> {
    let id = DMatrix::identity(n, n);
    match family {
        0 => {
            let k = rng.gen_range(1..=n / 2);
            let e = orthonormal(rng, n, k);
            &id - &e * e.transpose()
        }
        1 => &id + random_matrix(rng, n, n) * rng.gen_range(0.0..0.3),
        2 => {
            let mut d = id.clone();
            for _ in 0..rng.gen_range(1..=n / 4) {
                let i = rng.gen_range(0..n);
                d[(i, i)] = 0.0;
            }
            d
        }
        _ => {
            let k = rng.gen_range(1..=n / 4);
            let e = orthonormal(rng, n, k);
            (&id - &e * e.transpose()) * (&id + random_matrix(rng, n, n) * 0.05)
        }
    }
}

fn kernel_defect_checks(ctx: &mut Ctx) {
    let mut rng = ctx.rng(8);
    ctx.check("kernel-defect-battery", "almost-identity maps have nullity ≤ ε²N", |t| {
        let mut worst: f64 = 0.0;
        for n in [8, 16, 32] {
            for p in [1.0, 2.0] {
                for i in 0..100 {
                    let l = defect_matrix(&mut rng, n, i % 4);
                    let r = kernel_defect_check(&l, p)?;
                    if r.nullity > 0 {
                        worst = worst.max(r.nullity as f64 / (r.eps * r.eps * n as f64));
                    }
                    t.case(r.ok, || format!("N = {n}, p = {p}: nullity {} with ε = {}", r.nullity, r.eps));
                }
            }
        }
        t.note(format!("largest nullity/(ε²N) = {worst:.6}"));
        Ok(())
    });
}

// ---------------------------------------------------------------- kkt

fn dn_specs() -> Vec<(&'static str, SubspaceSpec)> {
    let mut v = vec![
        ("full", SubspaceSpec::Full { dim: 1 }),
        ("zero", SubspaceSpec::Zero { dim: 1 }),
        (
            "conv_image_damped",
            SubspaceSpec::ConvImage(ConvolutionKernel::scalar(&z(), &[(0, 1.0), (1, 0.5)]).expect("valid")),
        ),
    ];
    v.extend(scenario_specs());
    v
}

fn kkt_checks(ctx: &mut Ctx) {
    let settings = ctx.settings();
    let mut rng = ctx.rng(9);
    ctx.check("nearest-point-kkt", "nearest points satisfy the duality-map stationarity condition", |t| {
        for p in [1.5, 3.0] {
            for i in 0..50 {
                let block = if i % 5 == 4 { 2 } else { 1 };
                let n = block * rng.gen_range(1..=32 / block);
                let k = rng.gen_range(1..=(n / 2).max(1));
                let span = random_matrix(&mut rng, n, k);
                let ball = i % 2 == 0;
                let scale = if ball { 3.0 } else { 1.0 };
                let target: Vec<f64> = (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
                let proj = nearest_point(&target, &Feasible { span, ball, block }, p, &settings)?;
                let inside = !ball || block_norm(&proj.point, block, p) <= 1.0 + 1e-9;
                t.case(proj.residual <= 1e-6 && inside, || {
                    format!("p = {p}, n = {n}, k = {k}, ball = {ball}: residual {:e}", proj.residual)
                });
            }
        }
        Ok(())
    });
    let mut rng = ctx.rng(10);
    ctx.check("hilbert-projection", "p = 2 projections match the closed form", |t| {
        for i in 0..50 {
            let n = rng.gen_range(1..=32);
            let k = rng.gen_range(1..=n);
            let span = random_matrix(&mut rng, n, k);
            let ball = i % 2 == 0;
            let target = DVector::from_fn(n, |_, _| 3.0 * rng.gen_range(-1.0..1.0));
            let q = span.clone().svd(true, false).u.expect("U requested");
            let sv = span.singular_values();
            let smax = sv.max();
            let keep: Vec<usize> = (0..sv.len()).filter(|&j| sv[j] > 1e-8 * smax).collect();
            let q = DMatrix::from_fn(n, keep.len(), |r, c| q[(r, keep[c])]);
            let mut exact = &q * (q.transpose() * &target);
            if ball && exact.norm() > 1.0 {
                exact /= exact.norm();
            }
            let proj = nearest_point(target.as_slice(), &Feasible { span, ball, block: 1 }, 2.0, &settings)?;
            let gap = (DVector::from_column_slice(&proj.point) - &exact).amax();
            t.case(gap <= 1e-8, || format!("n = {n}, k = {k}, ball = {ball}: gap {gap:e}"));
        }
        Ok(())
    });
    ctx.check("d-n-range", "D and N lie in [0, 1]", |t| {
        let mut worst: f64 = 0.0;
        for (name, spec) in dn_specs() {
            for p in [1.5, 2.0, 3.0] {
                let r = d_and_n(&spec, p, &interval(0, 8), &settings)?;
                let ok = (-1e-9..=1.0 + 1e-9).contains(&r.d) && (-1e-9..=1.0 + 1e-9).contains(&r.n);
                t.case(ok, || format!("{name}, p = {p}: D = {}, N = {}", r.d, r.n));
                if p != 2.0 {
                    worst = worst.max(r.relation_residual);
                }
            }
        }
        t.note(format!("largest N/D relation residual off p = 2: {worst:.3e}"));
        Ok(())
    });
    ctx.check("d-n-hilbert-relation", "at p = 2, N = D", |t| {
        for (name, spec) in dn_specs() {
            let r = d_and_n(&spec, 2.0, &interval(0, 8), &settings)?;
            t.case((r.n - r.d).abs() <= 1e-8, || format!("{name}: |N − D| = {:e}", (r.n - r.d).abs()));
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- positivity

fn positivity_battery() -> Vec<(usize, usize, f64)> {
    let mut v = Vec::new();
    for (f, len) in [(1, 3), (2, 5), (3, 6), (4, 9)] {
        for eps0 in [0.05, 0.1, 0.3] {
            v.push((f, len, eps0));
        }
    }
    v
}

fn positivity_checks(ctx: &mut Ctx) {
    ctx.check("positivity-formula", "the positivity bound matches direct evaluation", |t| {
        let b = positivity_bound(0.1, 1.0, 3)?;
        t.case((b - 0.108368).abs() <= 1e-6, || format!("ε₀ = 0.1, p = 1, |F| = 3: {b}"));
        for p in [1.0, 1.5, 2.0] {
            let b = positivity_bound(1e-9, p, 1)?;
            t.case((b - 1.0).abs() <= 1e-6, || format!("ε₀ → 0, p = {p}: {b}"));
            let threshold = (2f64.powf(p / 2.0) + 1.0).powf(-1.0 / p);
            let near = positivity_bound(threshold * (1.0 - 1e-9), p, 1)?;
            t.case(near.abs() <= 1e-6, || format!("just below the threshold at p = {p}: {near}"));
            t.case(positivity_bound(threshold, p, 1)? == 0.0, || format!("at the threshold, p = {p}"));
        }
        t.case(positivity_bound(0.9, 2.0, 1)? == 0.0, || "ε₀ = 0.9, p = 2 is not trivial".into());
        t.case(matches!(positivity_bound(0.1, 3.0, 1), Err(Error::Capability(_))), || {
            "p = 3 accepted".into()
        });
        Ok(())
    });
    ctx.check("q-defect-battery", "the packing matrix stays within ε₁ of the identity", |t| {
        let omega = interval(0, 64);
        for (f, len, eps0) in positivity_battery() {
            let spec = SubspaceSpec::CyclicTranslates(Generator::truncated_geometric(f, len, eps0)?);
            for p in [1.0, 1.5, 2.0] {
                let (q, r) = build_q(&spec, &omega, p)?;
                let diag = (0..q.nrows()).all(|i| (q[(i, i)] - 1.0).abs() <= 1e-12);
                let dual_cap = (1.0 - eps0.powf(p)).powf(-1.0 / p);
                t.case(r.defect <= r.eps1 * (1.0 + 1e-12) && diag && r.dual_norm <= dual_cap * (1.0 + 1e-12), || {
                    format!("|F| = {f}, ε₀ = {eps0}, p = {p}: defect {} against ε₁ {}", r.defect, r.eps1)
                });
            }
        }
        Ok(())
    });
    let seed = ctx.seed;
    ctx.check("positivity-vs-estimate", "the positivity bound never exceeds the estimated upper value", |t| {
        let jobs: Vec<(usize, usize, f64, f64)> = positivity_battery()
            .into_iter()
            .filter(|&(_, _, e)| e == 0.1)
            .flat_map(|(f, len, e)| [1.0, 1.5, 2.0].map(|p| (f, len, e, p)))
            .collect();
        let results: Vec<Result<(f64, f64)>> = jobs
            .par_iter()
            .map(|&(f, len, eps0, p)| {
                let spec = SubspaceSpec::CyclicTranslates(Generator::truncated_geometric(f, len, eps0)?);
                let est = estimate_dimension(&spec, p, &[32, 64], &[0.5, 0.1], seed)?;
                Ok((positivity_bound(eps0, p, f)?, est.bracket.hi))
            })
            .collect();
        for (job, r) in jobs.iter().zip(results) {
            let (bound, hi) = r?;
            t.case(bound <= hi + 0.01, || format!("{job:?}: bound {bound} above estimate {hi}"));
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- dimension

fn corner_cells_equal(a: &DimensionEstimate, b: &DimensionEstimate) -> bool {
    a.grid.len() == b.grid.len()
        && a.grid
            .iter()
            .zip(&b.grid)
            .all(|(x, y)| x.ldim_lo == y.ldim_lo && x.ldim_hi == y.ldim_hi && x.epsilon == y.epsilon)
}

fn dimension_checks(ctx: &mut Ctx) {
    let seed = ctx.seed;
    let w = ctx.config.oracle_window;
    ctx.check("p1-exactness", "the full space has dimension dim V on every cell", |t| {
        for dim in [1, 2] {
            for p in [1.0, 2.0, f64::INFINITY] {
                let est = estimate_dimension(&SubspaceSpec::Full { dim }, p, &[16, 64, 128, 256], &[1.9, 1.0, 0.1], seed)?;
                for c in &est.grid {
                    t.case(c.norm_lo == dim as f64 && c.norm_hi == dim as f64, || format!("dim {dim}, p = {p}: {c:?}"));
                }
            }
        }
        let z2 = GroupSpec::lattice(2)?;
        let est = estimate_dimension_on(&SubspaceSpec::Full { dim: 1 }, &z2, 2.0, &[4, 8], &[1.0, 0.1], seed)?;
        for c in &est.grid {
            t.case(c.norm_lo == 1.0 && c.norm_hi == 1.0, || format!("Z²: {c:?}"));
        }
        Ok(())
    });
    ctx.check("zero-exactness", "the zero space has dimension 0", |t| {
        for p in [1.0, 2.0, f64::INFINITY] {
            let est = estimate_dimension(&SubspaceSpec::Zero { dim: 2 }, p, &[16, 64], &[1.0, 0.1], seed)?;
            t.case(est.grid.iter().all(|c| c.ldim_hi == 0), || format!("p = {p}: {:?}", est.bracket));
        }
        Ok(())
    });
    let image = SubspaceSpec::ConvImage(difference_kernel());
    let kernel = SubspaceSpec::ConvKernel(generic_row_kernel());
    ctx.check("fourier-oracle", "p = 2 brackets match the Fourier symbol rank", |t| {
        let cases = [
            (&image, fourier_oracle_dim(&difference_kernel(), FourierMode::Image, 4096)?),
            (&kernel, fourier_oracle_dim(&generic_row_kernel(), FourierMode::Kernel, 4096)?),
        ];
        for (spec, oracle) in cases {
            let est = estimate_dimension(spec, 2.0, &[w], &[0.05], seed)?;
            let mid = est.bracket.mid();
            t.case((mid - oracle).abs() <= 0.05, || format!("{}: mid {mid} against oracle {oracle}", spec.kind()));
            t.note(format!("{} mid {mid:.6} oracle {oracle:.6}", spec.kind()));
        }
        Ok(())
    });
    ctx.check("additivity", "brackets of direct sums add up within boundary slack", |t| {
        let pairs = [(&image, &kernel), (&image, &image), (&kernel, &kernel)];
        let shape = interval(0, 2);
        let slack = 2.0 * alpha(&interval(0, w as i64), &shape)? + 0.02;
        for (a, b) in pairs {
            let sum = SubspaceSpec::direct_sum(a.clone(), b.clone());
            let ests: Vec<Result<DimensionEstimate>> = [&sum, a, b]
                .par_iter()
                .map(|s| estimate_dimension(s, 2.0, &[w], &[0.05], seed))
                .collect();
            let mut mids = Vec::new();
            for e in ests {
                mids.push(e?.bracket.mid());
            }
            let gap = (mids[0] - mids[1] - mids[2]).abs();
            t.case(gap <= slack, || format!("{} ⊕ {}: gap {gap} above {slack}", a.kind(), b.kind()));
        }
        Ok(())
    });
    ctx.check("direct-sum-inequalities", "sub- and superadditivity of ldim over direct sums, cell by cell", |t| {
        let specs = scenario_specs();
        let eps = [1.5, 1.0, 0.5, 0.25, 0.1];
        let grid: Vec<(usize, usize, f64, i64)> = (0..specs.len())
            .flat_map(|i| (i..specs.len()).map(move |j| (i, j)))
            .flat_map(|(i, j)| [1.5, 2.0, 3.0].map(|p| (i, j, p)))
            .flat_map(|(i, j, p)| [16, 32].map(|m| (i, j, p, m)))
            .collect();
        let results: Vec<Result<Tally>> = grid
            .par_iter()
            .map(|&(i, j, p, m)| {
                let mut local = Tally::default();
                let (a, b) = (&specs[i].1, &specs[j].1);
                let omega = interval(0, m);
                let sum = SubspaceSpec::direct_sum(a.clone(), b.clone());
                let c = 2f64.powf(-1.0 / p);
                type Build = fn(&SubspaceSpec, &FiniteSubset, f64) -> Result<crate::spaces::WindowModel>;
                for build in [inner_window_model as Build, outer_window_model as Build] {
                    let x = BodyAnalysis::new(&build(&sum, &omega, p)?);
                    let x1 = BodyAnalysis::new(&build(a, &omega, p)?);
                    let x2 = BodyAnalysis::new(&build(b, &omega, p)?);
                    for &e in &eps {
                        let lhs = x.bracket(e).lo;
                        let rhs = x1.bracket(c * e).hi + x2.bracket(c * e).hi;
                        local.case(lhs <= rhs, || {
                            format!("{} ⊕ {} p = {p} |Ω| = {m} ε = {e}: {lhs} > {rhs}", specs[i].0, specs[j].0)
                        });
                        if p == 2.0 {
                            let low = x1.bracket(2.0 * e).lo + x2.bracket(2.0 * e).lo;
                            let l = x.bracket(e).hi;
                            local.case(l >= low, || {
                                format!("{} ⊕ {} |Ω| = {m} ε = {e}: {l} < {low}", specs[i].0, specs[j].0)
                            });
                        }
                    }
                }
                Ok(local)
            })
            .collect();
        for r in results {
            t.absorb(r?);
        }
        Ok(())
    });
    ctx.check("window-axioms", "windowed ldim is invariant, monotone, sublinear and subadditive", |t| {
        let eps = [1.5, 1.0, 0.5, 0.25, 0.1];
        for (name, spec) in scenario_specs() {
            let dim_v = spec.fiber_dim();
            for p in [1.0, 2.0, 3.0] {
                let c = 2f64.powf(-1.0 / p);
                for m in [8, 16] {
                    let omega = interval(0, m);
                    let brackets = |o: &FiniteSubset| -> Result<(BodyAnalysis, BodyAnalysis)> {
                        Ok((
                            BodyAnalysis::new(&inner_window_model(&spec, o, p)?),
                            BodyAnalysis::new(&outer_window_model(&spec, o, p)?),
                        ))
                    };
                    let (inner, outer) = brackets(&omega)?;
                    for shift in [3, -5] {
                        let moved = omega.translate(&GroupElement::integer(shift))?;
                        let (mi, mo) = brackets(&moved)?;
                        for &e in &eps {
                            let same = inner.bracket(e) == mi.bracket(e) && outer.bracket(e) == mo.bracket(e);
                            t.case(same, || format!("{name} p = {p} |Ω| = {m} ε = {e}: not invariant under {shift}"));
                        }
                    }
                    let seq = bracket_sequence(&outer, &eps);
                    for w in seq.windows(2) {
                        t.case(w[1].hi >= w[0].hi, || format!("{name} p = {p} |Ω| = {m}: not monotone"));
                    }
                    for &e in &eps {
                        t.case(outer.bracket(e).hi <= m as usize * dim_v, || format!("{name} p = {p}: above K|Ω|"));
                    }
                    let right = interval(m, 2 * m);
                    let union = interval(0, 2 * m);
                    let (ui, _) = brackets(&union)?;
                    let (_, ro) = brackets(&right)?;
                    for &e in &eps {
                        let lhs = ui.bracket(e).lo;
                        let rhs = outer.bracket(c * e).hi + ro.bracket(c * e).hi;
                        t.case(lhs <= rhs, || format!("{name} p = {p} |Ω| = {m} ε = {e}: {lhs} > {rhs}"));
                    }
                }
            }
        }
        Ok(())
    });
    ctx.check("reduction", "reduced subspaces reproduce every grid cell on matched windows", |t| {
        let specs = [
            SubspaceSpec::Full { dim: 1 },
            image.clone(),
            kernel.clone(),
            SubspaceSpec::ConvImage(ConvolutionKernel::scalar(&z(), &[(0, 1.0), (1, 1.0), (2, 0.5)])?),
        ];
        let eps = [1.5, 1.0, 0.5, 0.1];
        for spec in &specs {
            for d in [2, 3] {
                let reduced = reduce_spec(spec, d)?;
                for p in [1.0, 2.0, 3.0] {
                    let ms = [4, 8, 12];
                    let big: Vec<usize> = ms.iter().map(|m| m * d).collect();
                    let a = estimate_dimension(spec, p, &big, &eps, seed)?;
                    let b = estimate_dimension(&reduced, p, &ms, &eps, seed)?;
                    t.case(corner_cells_equal(&a, &b), || format!("{} d = {d} p = {p}: cells differ", spec.kind()));
                }
            }
        }
        Ok(())
    });
    ctx.check("dual-round-trip", "dual and primal estimates agree where both are known", |t| {
        for d in [1, 2] {
            for p in [1.0, 2.0, 3.0] {
                let dual = dual_dimension(&SubspaceSpec::Full { dim: d }, p, &[8, 32], &[1.0, 0.1], seed)?;
                let zero = estimate_dimension(&SubspaceSpec::Zero { dim: d }, p, &[8, 32], &[1.0, 0.1], seed)?;
                let ok = dual.bracket.lo + zero.bracket.hi == d as f64 && dual.bracket.hi + zero.bracket.lo == d as f64;
                t.case(ok, || format!("d = {d}, p = {p}: {:?} and {:?}", dual.bracket, zero.bracket));
            }
        }
        let primal = estimate_dimension(&image, 2.0, &[w], &[0.05], seed)?;
        let dual = dual_dimension(&image, 2.0, &[w], &[0.05], seed)?;
        let gap = (primal.bracket.mid() - dual.bracket.mid()).abs();
        t.case(gap <= 0.05, || format!("conv_image at p = 2: primal {:?}, dual {:?}", primal.bracket, dual.bracket));
        Ok(())
    });
    ctx.check("estimate-invariants", "cells are ordered, bounded by dim V and monotone in ε", |t| {
        let mut specs = scenario_specs();
        specs.push(("full", SubspaceSpec::Full { dim: 2 }));
        for (name, spec) in &specs {
            for p in [1.0, 1.5, 2.0, 3.0] {
                let est = estimate_dimension(spec, p, &[8, 16, 32], &[1.5, 1.0, 0.5, 0.1], seed)?;
                let bounded = est
                    .grid
                    .iter()
                    .all(|c| 0.0 <= c.norm_lo && c.norm_lo <= c.norm_hi && c.norm_hi <= est.fiber_dim as f64);
                t.case(bounded && est.monotone, || format!("{name} p = {p}: {:?}", est.diagnostics));
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- illustrations

fn illustration_checks(ctx: &mut Ctx) {
    let seed = ctx.seed;
    let windows = [4, 8, 16, 32, 64];
    ctx.check("ker-periodization-l1", "kernels of periodization have dimension 1 in ℓ¹", |t| {
        for n in [2, 5] {
            let est = estimate_dimension(&SubspaceSpec::KerPeriodization { period: n }, 1.0, &windows, &[0.99, 0.5, 0.1], seed)?;
            for c in &est.grid {
                t.case(c.norm_lo == 1.0 && c.norm_hi == 1.0, || format!("n = {n}: {c:?}"));
            }
        }
        Ok(())
    });
    let windows = [8, 16, 64, 256];
    let eps = [1.5, 1.0, 0.1];
    ctx.check("periodic-infty", "n-periodic sequences occupy at most n coordinates of any window", |t| {
        for n in [1u64, 2, 3, 5] {
            let est = estimate_dimension(&SubspaceSpec::PeriodicInfty { period: n }, f64::INFINITY, &windows, &eps, seed)?;
            for c in &est.grid {
                let ok = c.ldim_hi <= n as usize && c.norm_hi <= n as f64 / c.window_size as f64;
                t.case(ok, || format!("n = {n}: {c:?}"));
            }
            t.note(format!("n = {n}: corner {:?}", est.bracket));
        }
        Ok(())
    });
    ctx.check("periodic-union", "the union of all periods fills every window", |t| {
        let est = estimate_dimension(&SubspaceSpec::PeriodicUnion, f64::INFINITY, &windows, &eps, seed)?;
        for c in &est.grid {
            t.case(c.norm_lo == 1.0 && c.norm_hi == 1.0, || format!("{c:?}"));
        }
        Ok(())
    });
}

// ---------------------------------------------------------------- approximate units

fn approx_unit_checks(ctx: &mut Ctx) {
    let seed = ctx.seed;
    let report = approximate_units(10, 100, seed);
    ctx.check("unit-epsilon-decay", "approximate units converge to the Dirac mass in ℓ¹", |t| {
        let r = report.as_ref().map_err(Clone::clone)?;
        t.case(r.decreasing, || format!("ε_k not decreasing: {:?}", r.eps));
        t.case(r.k0.is_some(), || format!("ε_k never settles below {}: {:?}", r.threshold, r.eps));
        t.note(format!("k0 = {:?}, ε_10 = {:.3e}", r.k0, r.eps.last().copied().unwrap_or(f64::NAN)));
        Ok(())
    });
    ctx.check("weak-approximation", "|⟨α, z*y_k⟩ − ⟨α, z⟩| ≤ ε_k ‖α‖_∞ ‖z‖₁", |t| {
        let r = report.as_ref().map_err(Clone::clone)?;
        t.cases += r.pairs;
        t.failures += r.violations;
        if r.violations > 0 {
            t.first = Some(format!("{} violations, worst ratio {}", r.violations, r.worst_ratio));
        }
        t.case(r.membership_residual <= 1e-12, || {
            format!("z*y_k leaves the image: residual {:e}", r.membership_residual)
        });
        t.note(format!("worst ratio {:.6}", r.worst_ratio));
        Ok(())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_oracle_basics() {
        assert!(eps_disjoint_by_matching(&[interval(0, 10), interval(9, 19)], 0.1));
        assert!(!eps_disjoint_by_matching(&[interval(0, 10), interval(5, 15)], 0.1));
        assert!(eps_disjoint_by_matching(&[interval(0, 10), interval(5, 15)], 0.5));
        assert!(!eps_disjoint_by_matching(&[interval(0, 4), interval(0, 4), interval(0, 4)], 0.5));
    }

    #[test]
    fn unknown_group_is_rejected() {
        let cfg = SuiteConfig {
            only: vec!["nope".into()],
            ..SuiteConfig::default()
        };
        assert!(property_suite(&cfg, 1).is_err());
    }

    #[test]
    fn filtered_run() {
        let cfg = SuiteConfig {
            only: vec!["young".into(), "approximate_units".into()],
            ..SuiteConfig::default()
        };
        let r = property_suite(&cfg, 42).unwrap();
        assert_eq!(r.groups, vec!["young", "approximate_units"]);
        assert!(r.passed, "{:?}", r.failed().collect::<Vec<_>>());
    }

    #[test]
    fn faulty_duality_fails_kkt() {
        let cfg = SuiteConfig {
            only: vec!["kkt".into()],
            duality: DualityMap::FaultySign,
            ..SuiteConfig::default()
        };
        let r = property_suite(&cfg, 42).unwrap();
        let failed: Vec<&str> = r.failed().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["nearest-point-kkt"]);
    }
}
