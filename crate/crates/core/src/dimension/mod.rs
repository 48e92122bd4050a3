//! Dimension estimates assembled from windowed widths, the dual dimension,
//! the positivity bound and the `D`/`N` projection quantities.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, capability, Error, Result};
use crate::groups::{FiniteSubset, GroupElement, GroupSpec};
use crate::linalg::{block_norm, block_norm_pow, conjugate};
use crate::spaces::{
    annihilator_spec, inner_window_model, outer_window_model, ConvolutionKernel, Field, SubspaceSpec,
};
use crate::tiling::greedy_pack;
use crate::widths::{nearest_point, BodyAnalysis, Feasible, SolverSettings};

mod suite;

pub use suite::{property_suite, CheckOutcome, SuiteConfig, SuiteReport, CHECK_GROUPS};

/// Serializes exponents as numbers, with `"inf"` for `p = ∞`.
pub mod exponent {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(p) => Ok(p),
            Repr::Text(t) => parse(&t).map_err(serde::de::Error::custom),
        }
    }

    /// Accepts decimal numbers and `inf`/`infinity`.
    pub fn parse(text: &str) -> Result<f64, String> {
        match text.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
            t => t.parse::<f64>().map_err(|e| format!("bad exponent {text:?}: {e}")),
        }
    }
}

/// Ambient sequence space the estimate lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambient {
    Lp,
    /// Finite windows cannot tell `c₀` from `ℓ^∞`; kept for dual routing.
    C0,
    LInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub window: usize,
    pub window_size: usize,
    pub epsilon: f64,
    pub ldim_lo: usize,
    pub ldim_hi: usize,
    pub norm_lo: f64,
    pub norm_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub spec: String,
    #[serde(with = "exponent")]
    pub p: f64,
    pub ambient: Ambient,
    pub fiber_dim: usize,
    pub seed: u64,
    /// Cells ordered by window, then by ε as given.
    pub grid: Vec<Cell>,
    /// Read at the largest window and the smallest ε.
    pub bracket: Bracket,
    pub monotone: bool,
    pub diagnostics: Vec<String>,
}

impl DimensionEstimate {
    pub fn cell(&self, window: usize, epsilon: f64) -> Option<&Cell> {
        self.grid.iter().find(|c| c.window == window && c.epsilon == epsilon)
    }
}

fn find_group(spec: &SubspaceSpec) -> Option<GroupSpec> {
    match spec {
        SubspaceSpec::ConvKernel(h) | SubspaceSpec::ConvImage(h) => Some(h.group().clone()),
        SubspaceSpec::CyclicTranslates(g) => Some(g.group().clone()),
        SubspaceSpec::DirectSum { left, right } => find_group(left).or_else(|| find_group(right)),
        SubspaceSpec::Annihilator { inner } => find_group(inner),
        _ => None,
    }
}

/// The group a spec lives over; specs without a kernel default to `Z`.
pub fn natural_group(spec: &SubspaceSpec) -> GroupSpec {
    find_group(spec).unwrap_or_else(GroupSpec::integers)
}

fn check_grid(windows: &[usize], eps: &[f64]) -> Result<()> {
    if windows.is_empty() || eps.is_empty() {
        return Err(argument("window and ε grids must be nonempty"));
    }
    if windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(argument("windows must be strictly ascending"));
    }
    if eps.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(argument("ε values must be strictly descending"));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(argument("ε values must be positive and finite"));
    }
    Ok(())
}

fn window_cells(spec: &SubspaceSpec, group: &GroupSpec, p: f64, index: usize, eps: &[f64]) -> Result<Vec<Cell>> {
    let omega = group.folner_window(index)?;
    let inner = BodyAnalysis::new(&inner_window_model(spec, &omega, p)?);
    let outer = BodyAnalysis::new(&outer_window_model(spec, &omega, p)?);
    let size = omega.len();
    Ok(eps
        .iter()
        .map(|&e| {
            let lo = inner.bracket(e).lo;
            let hi = outer.bracket(e).hi;
            Cell {
                window: index,
                window_size: size,
                epsilon: e,
                ldim_lo: lo,
                ldim_hi: hi,
                norm_lo: lo as f64 / size as f64,
                norm_hi: hi as f64 / size as f64,
            }
        })
        .collect())
}

/// Checks the cell invariants. `increasing` flips the expected direction in ε.
fn diagnose(grid: &[Cell], fiber_dim: usize, increasing: bool) -> Vec<String> {
    let mut out = Vec::new();
    let mut by_window: BTreeMap<usize, Vec<&Cell>> = BTreeMap::new();
    for c in grid {
        by_window.entry(c.window).or_default().push(c);
        if c.ldim_lo > c.ldim_hi {
            out.push(format!(
                "window {} ε {}: lower count {} exceeds upper count {}",
                c.window, c.epsilon, c.ldim_lo, c.ldim_hi
            ));
        }
        if c.ldim_hi > c.window_size * fiber_dim {
            out.push(format!(
                "window {} ε {}: upper count {} exceeds the ambient dimension",
                c.window, c.epsilon, c.ldim_hi
            ));
        }
    }
    for (w, cells) in by_window {
        for pair in cells.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            // ε decreases from a to b
            let bad = if increasing {
                b.ldim_lo > a.ldim_lo || b.ldim_hi > a.ldim_hi
            } else {
                b.ldim_lo < a.ldim_lo || b.ldim_hi < a.ldim_hi
            };
            if bad {
                out.push(format!(
                    "window {w}: counts ({}, {}) at ε {} against ({}, {}) at ε {}",
                    a.ldim_lo, a.ldim_hi, a.epsilon, b.ldim_lo, b.ldim_hi, b.epsilon
                ));
            }
        }
    }
    out
}

fn assemble(
    spec: String,
    p: f64,
    ambient: Ambient,
    fiber_dim: usize,
    seed: u64,
    grid: Vec<Cell>,
    increasing: bool,
) -> DimensionEstimate {
    let corner = *grid.last().expect("nonempty grid");
    let diagnostics = diagnose(&grid, fiber_dim, increasing);
    DimensionEstimate {
        spec,
        p,
        ambient,
        fiber_dim,
        seed,
        bracket: Bracket {
            lo: corner.norm_lo,
            hi: corner.norm_hi,
        },
        monotone: diagnostics.is_empty(),
        grid,
        diagnostics,
    }
}

fn ambient_for(p: f64) -> Ambient {
    if p.is_infinite() {
        Ambient::C0
    } else {
        Ambient::Lp
    }
}

/// Windowed dimension brackets on the Følner windows `Ω_i`, `i ∈ windows`.
///
/// Each cell pairs the lower count of the inner model with the upper count
/// of the outer model, both divided by `|Ω_i|`.
pub fn estimate_dimension(
    spec: &SubspaceSpec,
    p: f64,
    windows: &[usize],
    eps: &[f64],
    seed: u64,
) -> Result<DimensionEstimate> {
    estimate_dimension_on(spec, &natural_group(spec), p, windows, eps, seed)
}

pub fn estimate_dimension_on(
    spec: &SubspaceSpec,
    group: &GroupSpec,
    p: f64,
    windows: &[usize],
    eps: &[f64],
    seed: u64,
) -> Result<DimensionEstimate> {
    if !(p >= 1.0) {
        return Err(argument(format!("exponent p must lie in [1, ∞], got {p}")));
    }
    check_grid(windows, eps)?;
    let rows: Vec<Result<Vec<Cell>>> = windows
        .par_iter()
        .map(|&i| window_cells(spec, group, p, i, eps))
        .collect();
    let mut grid = Vec::with_capacity(windows.len() * eps.len());
    for r in rows {
        grid.extend(r?);
    }
    Ok(assemble(
        spec.kind().to_string(),
        p,
        ambient_for(p),
        spec.fiber_dim(),
        seed,
        grid,
        false,
    ))
}

/// `dim V` minus the `ℓ^{p′}` estimate of the annihilator, bracket flipped.
pub fn dual_dimension(
    spec: &SubspaceSpec,
    p: f64,
    windows: &[usize],
    eps: &[f64],
    seed: u64,
) -> Result<DimensionEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(argument(format!("dual dimension needs p in [1, ∞), got {p}")));
    }
    let ann = annihilator_spec(spec)?;
    let q = conjugate(p);
    let est = estimate_dimension_on(&ann, &natural_group(spec), q, windows, eps, seed)?;
    let dim_v = spec.fiber_dim();
    let grid = est
        .grid
        .iter()
        .map(|c| {
            let total = dim_v * c.window_size;
            let lo = total - c.ldim_hi.min(total);
            let hi = total - c.ldim_lo.min(total);
            Cell {
                ldim_lo: lo,
                ldim_hi: hi,
                norm_lo: lo as f64 / c.window_size as f64,
                norm_hi: hi as f64 / c.window_size as f64,
                ..*c
            }
        })
        .collect();
    let ambient = if q.is_infinite() { Ambient::LInfinity } else { Ambient::Lp };
    Ok(assemble(format!("dual/{}", spec.kind()), p, ambient, dim_v, seed, grid, true))
}

/// `ε₀ / (1 − ε₀^p)^{1/p}`.
pub fn eps1(eps0: f64, p: f64) -> f64 {
    eps0 / (1.0 - eps0.powf(p)).powf(1.0 / p)
}

/// Lower bound `max(0, (1 − 2ε₁²)/|F|²)` for a generator with tail `ε₀`
/// outside `F`.
pub fn positivity_bound(eps0: f64, p: f64, shape_size: usize) -> Result<f64> {
    if !(1.0..=2.0).contains(&p) {
        return Err(capability(format!("the positivity bound only holds for p in [1, 2], got {p}")));
    }
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(argument(format!("tail bound must lie in (0, 1), got {eps0}")));
    }
    if shape_size < 1 {
        return Err(argument("shape must be nonempty"));
    }
    if eps0 >= (2f64.powf(p / 2.0) + 1.0).powf(-1.0 / p) {
        return Ok(0.0);
    }
    let e1 = eps1(eps0, p);
    Ok(((1.0 - 2.0 * e1 * e1) / (shape_size * shape_size) as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub eps0: f64,
    pub eps1: f64,
    pub shape_size: usize,
    pub bound: f64,
    /// `max_k ‖Q e_k − e_k‖_p`.
    pub defect: f64,
    pub packing_count: usize,
    /// `‖y*‖_{p′}` of the norming functional.
    pub dual_norm: f64,
    pub tail: f64,
}

/// The almost-identity matrix `Q_jk = ⟨γ_j y*, γ_k y⟩` over the packing
/// centers `γ_j` of the generator's shape in `Ω`.
pub fn build_q(spec: &SubspaceSpec, omega: &FiniteSubset, p: f64) -> Result<(DMatrix<f64>, PositivityReport)> {
    let SubspaceSpec::CyclicTranslates(gen) = spec else {
        return Err(argument(format!("build_q needs a cyclic subspace, got {}", spec.kind())));
    };
    if !(1.0..=2.0).contains(&p) {
        return Err(capability(format!("build_q is set up for p in [1, 2], got {p}")));
    }
    let tail = gen.tail(p);
    if tail > gen.eps0 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "measured tail {tail:e} exceeds the declared bound {:e}",
            gen.eps0
        )));
    }
    let y = gen.normalized(p);
    let y_f = y.restrict(&gen.shape);
    let mass = y_f.norm(p).powf(p);
    let mut dual = Field::zeros(y.group(), y.dim());
    for (g, v) in y_f.iter() {
        let n = v.norm();
        if n > 0.0 {
            dual.add_at(g.clone(), &(v * (n.powf(p - 2.0) / mass)))?;
        }
    }
    let centers = greedy_pack(omega, &gen.shape)?.centers;
    let k = centers.len();
    let duals: Vec<Field> = centers.iter().map(|g| dual.translate(g)).collect::<Result<_>>()?;
    let ys: Vec<Field> = centers.iter().map(|g| y.translate(g)).collect::<Result<_>>()?;
    let mut q = DMatrix::zeros(k, k);
    for j in 0..k {
        for l in 0..k {
            q[(j, l)] = duals[j].pair(&ys[l])?;
        }
    }
    let defect = (0..k)
        .map(|l| {
            let mut col: Vec<f64> = q.column(l).iter().copied().collect();
            col[l] -= 1.0;
            block_norm(&col, 1, p)
        })
        .fold(0.0, f64::max);
    let report = PositivityReport {
        eps0: gen.eps0,
        eps1: eps1(gen.eps0, p),
        shape_size: gen.shape.len(),
        bound: positivity_bound(gen.eps0, p, gen.shape.len())?,
        defect,
        packing_count: k,
        dual_norm: dual.norm(conjugate(p)),
        tail,
    };
    Ok((q, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DnReport {
    /// `⟨δ_e, x*⟩`.
    pub d: f64,
    /// `‖x*‖_p^p`.
    pub n: f64,
    /// `|N − D^p − (1 − D)^{p−1} D|`.
    pub relation_residual: f64,
    pub kkt_residual: f64,
    pub multiplier: f64,
}

/// `D` and `N` for the nearest point to the basis vector at `row` in
/// `span ∩ B_p`.
pub fn d_and_n_span(span: &DMatrix<f64>, row: usize, block: usize, p: f64, settings: &SolverSettings) -> Result<DnReport> {
    if row >= span.nrows() {
        return Err(argument("target row outside the ambient space"));
    }
    let mut target = vec![0.0; span.nrows()];
    target[row] = 1.0;
    let feasible = Feasible {
        span: span.clone(),
        ball: true,
        block,
    };
    let proj = nearest_point(&target, &feasible, p, settings)?;
    let d = proj.point[row];
    let n = block_norm_pow(&proj.point, block, p);
    let dc = d.clamp(0.0, 1.0);
    let relation = dc.powf(p) + (1.0 - dc).powf(p - 1.0) * dc;
    Ok(DnReport {
        d,
        n,
        relation_residual: (n - relation).abs(),
        kkt_residual: proj.residual,
        multiplier: proj.multiplier,
    })
}

/// `D` and `N` of the inner window model of `spec` on `Ω ∋ e`.
pub fn d_and_n(spec: &SubspaceSpec, p: f64, omega: &FiniteSubset, settings: &SolverSettings) -> Result<DnReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(argument(format!("D and N need p in (1, ∞), got {p}")));
    }
    let e = omega.owner().identity();
    if !omega.contains(&e) {
        return Err(argument("the window must contain the identity"));
    }
    let model = inner_window_model(spec, omega, p)?;
    let (support, span) = match &model.lift {
        Some(l) => (&l.support, &l.full),
        None => (&model.window, &model.generators),
    };
    let row = support.index_of(&e).expect("support contains the window") * model.fiber_dim;
    d_and_n_span(span, row, model.block(), p, settings)
}

/// The spaces of the weak-approximation demo: images of
/// `δ₀ − r_k δ_n` with `r_k = k/(k+1)` and `n = 2`.
pub fn approx_unit_kernel(k: usize) -> ConvolutionKernel {
    let r = k as f64 / (k as f64 + 1.0);
    ConvolutionKernel::scalar(&GroupSpec::integers(), &[(0, 1.0), (UNIT_STEP, -r)]).expect("valid kernel")
}

const UNIT_STEP: i64 = 2;

pub fn approx_unit_space(k: usize) -> SubspaceSpec {
    SubspaceSpec::ConvImage(approx_unit_kernel(k))
}

/// `y_k = h_k * t_k` with the truncated inverse `t_k = Σ_{j<k²} r_k^j δ_{2j}`.
pub fn approx_unit(k: usize) -> Result<(Field, Field)> {
    let z = GroupSpec::integers();
    let r = k as f64 / (k as f64 + 1.0);
    let t = Field::scalars(
        &z,
        (0..(k * k) as i64).map(|j| (GroupElement::integer(UNIT_STEP * j), r.powi(j as i32))),
    )?;
    let y = approx_unit_kernel(k).convolve(&t)?;
    Ok((y, t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxUnitReport {
    /// `ε_k = ‖δ_e − y_k‖₁` for `k = 1..`.
    pub eps: Vec<f64>,
    /// First `k` from which every `ε_k` stays below the threshold.
    pub k0: Option<usize>,
    pub threshold: f64,
    pub decreasing: bool,
    pub pairs: usize,
    pub violations: usize,
    /// Largest `|⟨α, z*y_k⟩ − ⟨α, z⟩| / (ε_k ‖α‖_∞ ‖z‖₁)`.
    pub worst_ratio: f64,
    /// Largest deviation of `z*y_k` from `h_k * (z*t_k)`.
    pub membership_residual: f64,
}

fn scalar_kernel_of(f: &Field) -> Result<ConvolutionKernel> {
    let coeffs: Vec<(i64, f64)> = f.iter().map(|(g, v)| (g.coords()[0], v[0])).collect();
    ConvolutionKernel::scalar(f.group(), &coeffs)
}

/// Measures `ε_k` for `k ≤ k_max` and tests the weak approximation bound on
/// `pairs` random `(α, z)`.
pub fn approximate_units(k_max: usize, pairs: usize, seed: u64) -> Result<ApproxUnitReport> {
    use rand::{Rng, SeedableRng};
    if k_max == 0 {
        return Err(argument("need at least one approximant"));
    }
    let z_group = GroupSpec::integers();
    let delta = Field::dirac(&z_group, 1, z_group.identity(), 0, 1.0)?;
    let mut approximants = Vec::with_capacity(k_max);
    let mut eps = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let (y, t) = approx_unit(k)?;
        eps.push(delta.sub(&y)?.norm(1.0));
        approximants.push((y, t));
    }
    let threshold = 0.05;
    let k0 = (0..k_max)
        .rev()
        .take_while(|&i| eps[i] < threshold)
        .last()
        .map(|i| i + 1);
    let decreasing = eps.windows(2).all(|w| w[1] < w[0]);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut membership_residual: f64 = 0.0;
    for _ in 0..pairs {
        let k = rng.gen_range(1..=k_max);
        let (y, t) = &approximants[k - 1];
        let len = rng.gen_range(1..=12);
        let z = Field::scalars(
            &z_group,
            (0..len).map(|_| (GroupElement::integer(rng.gen_range(-10..=10)), rng.gen_range(-1.0..1.0))),
        )?;
        let zy = scalar_kernel_of(y)?.convolve(&z)?;
        let via = approx_unit_kernel(k).convolve(&scalar_kernel_of(t)?.convolve(&z)?)?;
        let gap = zy.sub(&via)?;
        membership_residual = membership_residual.max(gap.norm(f64::INFINITY));
        let support = zy.support().union(&z.support())?;
        let alpha = Field::scalars(&z_group, support.iter().map(|g| (g.clone(), rng.gen_range(-1.0..1.0))))?;
        let lhs = (alpha.pair(&zy)? - alpha.pair(&z)?).abs();
        let rhs = eps[k - 1] * alpha.norm(f64::INFINITY) * z.norm(1.0);
        if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
            violations += 1;
        }
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
    }
    Ok(ApproxUnitReport {
        eps,
        k0,
        threshold,
        decreasing,
        pairs,
        violations,
        worst_ratio,
        membership_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{FourierMode, Generator};
    use approx::assert_relative_eq;

    fn z() -> GroupSpec {
        GroupSpec::integers()
    }

    #[test]
    fn full_and_zero_are_exact() {
        for p in [1.0, 2.0, f64::INFINITY] {
            let est = estimate_dimension(&SubspaceSpec::Full { dim: 2 }, p, &[8, 16], &[1.9, 1.0, 0.1], 0).unwrap();
            assert!(est.grid.iter().all(|c| c.norm_lo == 2.0 && c.norm_hi == 2.0));
            assert_eq!(est.bracket, Bracket { lo: 2.0, hi: 2.0 });
            let est = estimate_dimension(&SubspaceSpec::Zero { dim: 2 }, p, &[8], &[0.5], 0).unwrap();
            assert_eq!(est.bracket, Bracket { lo: 0.0, hi: 0.0 });
        }
    }

    #[test]
    fn grid_preconditions() {
        let full = SubspaceSpec::Full { dim: 1 };
        assert!(estimate_dimension(&full, 2.0, &[], &[0.5], 0).is_err());
        assert!(estimate_dimension(&full, 2.0, &[16, 8], &[0.5], 0).is_err());
        assert!(estimate_dimension(&full, 2.0, &[8], &[0.1, 0.5], 0).is_err());
    }

    #[test]
    fn conv_image_near_oracle() {
        let h = ConvolutionKernel::scalar(&z(), &[(0, 1.0), (1, -1.0)]).unwrap();
        let oracle = crate::spaces::fourier_oracle_dim(&h, FourierMode::Image, 1024).unwrap();
        let est = estimate_dimension(&SubspaceSpec::ConvImage(h), 2.0, &[64], &[0.05], 0).unwrap();
        assert!((est.bracket.mid() - oracle).abs() <= 0.05);
    }

    #[test]
    fn dual_round_trip() {
        for p in [1.0, 2.0, 3.0] {
            let w = [8, 16];
            let e = [1.0, 0.5];
            let dual = dual_dimension(&SubspaceSpec::Full { dim: 3 }, p, &w, &e, 0).unwrap();
            let zero = estimate_dimension(&SubspaceSpec::Zero { dim: 3 }, p, &w, &e, 0).unwrap();
            assert_eq!(dual.bracket.lo + zero.bracket.hi, 3.0);
            assert_eq!(dual.bracket.hi + zero.bracket.lo, 3.0);
            let dual = dual_dimension(&SubspaceSpec::Zero { dim: 3 }, p, &w, &e, 0).unwrap();
            assert_eq!(dual.bracket, Bracket { lo: 0.0, hi: 0.0 });
        }
        assert_eq!(dual_dimension(&SubspaceSpec::Full { dim: 1 }, 1.0, &[8], &[0.5], 0).unwrap().ambient, Ambient::LInfinity);
        assert!(matches!(
            dual_dimension(&SubspaceSpec::KerPeriodization { period: 2 }, 1.0, &[8], &[0.5], 0),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn positivity_examples() {
        assert_relative_eq!(positivity_bound(0.1, 1.0, 3).unwrap(), 79.0 / 729.0, epsilon = 1e-12);
        assert!((positivity_bound(1e-9, 1.5, 1).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(positivity_bound(0.9, 2.0, 1).unwrap(), 0.0);
        assert!(matches!(positivity_bound(0.1, 3.0, 1), Err(Error::Capability(_))));
        assert!(positivity_bound(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn q_of_dirac_is_identity() {
        let y = Field::dirac(&z(), 1, z().identity(), 0, 1.0).unwrap();
        let gen = Generator::new(y, FiniteSubset::interval(&z(), 0, 1).unwrap(), 0.1).unwrap();
        let omega = FiniteSubset::interval(&z(), 0, 8).unwrap();
        let (q, rep) = build_q(&SubspaceSpec::CyclicTranslates(gen), &omega, 1.0).unwrap();
        assert_eq!(q, DMatrix::identity(8, 8));
        assert_eq!(rep.defect, 0.0);
        assert_eq!(rep.packing_count, 8);
    }

    #[test]
    fn q_defect_within_bound() {
        let gen = Generator::truncated_geometric(4, 12, 0.1).unwrap();
        let omega = FiniteSubset::interval(&z(), 0, 64).unwrap();
        let spec = SubspaceSpec::CyclicTranslates(gen);
        let (_, rep) = build_q(&spec, &omega, 1.0).unwrap();
        assert!(rep.defect <= 1.0 / 9.0);
        assert!(rep.dual_norm <= 1.0 / 0.9 + 1e-12);
        let (_, rep) = build_q(&spec, &omega, 2.0).unwrap();
        assert!(rep.defect <= 0.1 / 0.99f64.sqrt());
        assert_eq!(rep.packing_count, 16);
    }

    #[test]
    fn q_rejects_false_tail() {
        let y = Field::scalars(&z(), [(GroupElement::integer(0), 1.0), (GroupElement::integer(3), 1.0)]).unwrap();
        let gen = Generator::new(y, FiniteSubset::interval(&z(), 0, 1).unwrap(), 0.1).unwrap();
        let omega = FiniteSubset::interval(&z(), 0, 8).unwrap();
        assert!(matches!(
            build_q(&SubspaceSpec::CyclicTranslates(gen), &omega, 2.0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn d_and_n_examples() {
        let s = SolverSettings::default();
        let omega = FiniteSubset::interval(&z(), 0, 4).unwrap();
        for p in [1.5, 3.0] {
            let full = d_and_n(&SubspaceSpec::Full { dim: 1 }, p, &omega, &s).unwrap();
            assert_relative_eq!(full.d, 1.0, epsilon = 1e-9);
            assert_relative_eq!(full.n, 1.0, epsilon = 1e-9);
            let zero = d_and_n(&SubspaceSpec::Zero { dim: 1 }, p, &omega, &s).unwrap();
            assert_eq!((zero.d, zero.n), (0.0, 0.0));
        }
        let span = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]) / 2f64.sqrt();
        let r = d_and_n_span(&span, 0, 1, 2.0, &s).unwrap();
        assert_relative_eq!(r.d, 0.5, epsilon = 1e-9);
        assert_relative_eq!(r.n, 0.5, epsilon = 1e-9);
        assert!(r.relation_residual < 1e-9);
        assert!(d_and_n(&SubspaceSpec::Full { dim: 1 }, 1.0, &omega, &s).is_err());
        let off = FiniteSubset::interval(&z(), 1, 4).unwrap();
        assert!(d_and_n(&SubspaceSpec::Full { dim: 1 }, 2.0, &off, &s).is_err());
    }

    #[test]
    fn approximate_unit_construction() {
        let rep = approximate_units(8, 100, 7).unwrap();
        assert!(rep.decreasing);
        assert_eq!(rep.k0, Some(4));
        assert_eq!(rep.violations, 0);
        assert!(rep.membership_residual < 1e-12);
        assert!(rep.worst_ratio <= 1.0 + 1e-12);
        let (y, _) = approx_unit(2).unwrap();
        assert_relative_eq!(y.get(&GroupElement::integer(0))[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exponent_text() {
        assert_eq!(exponent::parse("inf").unwrap(), f64::INFINITY);
        assert_eq!(exponent::parse("1.5").unwrap(), 1.5);
        assert!(exponent::parse("x").is_err());
        let est = estimate_dimension(&SubspaceSpec::Full { dim: 1 }, f64::INFINITY, &[4], &[0.5], 0).unwrap();
        let json = serde_json::to_string(&est).unwrap();
        assert!(json.contains("\"p\":\"inf\""));
        let back: DimensionEstimate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, est);
    }
}
