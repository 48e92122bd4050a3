//! Finite-dimensional widths: ldim of window bodies, the width quartet,
//! matrix norms, the Mazur map and nearest-point projections in ℓ^p.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, capability, Error, Result};
use crate::linalg::{self, block_norm, conjugate};
use crate::spaces::WindowModel;

fn check_exponent(p: f64, what: &str) -> Result<()> {
    if !(p >= 1.0) {
        return Err(argument(format!("{what} must lie in [1, ∞], got {p}")));
    }
    Ok(())
}

/// `(Σ|m_ij|^p)^{1/p}`, the max for `p = ∞`.
pub fn entrywise_norm(m: &DMatrix<f64>, p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    Ok(block_norm(m.as_slice(), 1, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OperatorNorm {
    Exact { value: f64 },
    Bracket { lo: f64, hi: f64 },
}

impl OperatorNorm {
    pub fn lo(&self) -> f64 {
        match *self {
            OperatorNorm::Exact { value } => value,
            OperatorNorm::Bracket { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            OperatorNorm::Exact { value } => value,
            OperatorNorm::Bracket { hi, .. } => hi,
        }
    }
}

fn vec_norm(x: &[f64], p: f64) -> f64 {
    block_norm(x, 1, p)
}

/// Exact `ℓ^p → ℓ^q` norm on the corners where a formula exists.
fn exact_operator_norm(m: &DMatrix<f64>, p: f64, q: f64) -> Option<f64> {
    if m.is_empty() {
        return Some(0.0);
    }
    if p == 1.0 {
        return Some(
            (0..m.ncols())
                .map(|j| vec_norm(m.column(j).as_slice(), q))
                .fold(0.0, f64::max),
        );
    }
    if q.is_infinite() {
        let pc = conjugate(p);
        return Some(
            (0..m.nrows())
                .map(|i| {
                    let row: Vec<f64> = m.row(i).iter().copied().collect();
                    vec_norm(&row, pc)
                })
                .fold(0.0, f64::max),
        );
    }
    if p == 2.0 && q == 2.0 {
        return Some(linalg::singular_values(m).first().copied().unwrap_or(0.0));
    }
    None
}

/// Norm of the identity `ℓ^a → ℓ^b` on `K^n`.
fn identity_norm(n: usize, a: f64, b: f64) -> f64 {
    let (ia, ib) = (1.0 / a, 1.0 / b);
    if ib <= ia {
        1.0
    } else {
        (n as f64).powf(ib - ia)
    }
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn from_inv(x: f64) -> f64 {
    if x <= 1e-12 {
        f64::INFINITY
    } else if x >= 1.0 - 1e-12 {
        1.0
    } else {
        1.0 / x
    }
}

/// Operator norm `‖M‖_{ℓp→ℓq}`: exact for `p = 1`, `q = ∞` and `p = q = 2`,
/// otherwise a bracket between sampled unit vectors and interpolation or
/// norm-comparison bounds from the exact corners.
pub fn operator_norm(m: &DMatrix<f64>, p: f64, q: f64, seed: u64) -> Result<OperatorNorm> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    if let Some(value) = exact_operator_norm(m, p, q) {
        return Ok(OperatorNorm::Exact { value });
    }
    let (r, c) = m.shape();
    let corner = |x: f64, y: f64| exact_operator_norm(m, from_inv(x), from_inv(y)).expect("exact corner");
    let (tx, ty) = (inv(p), inv(q));
    let mut hi = f64::INFINITY;
    // comparison through the exact corners (1, q'), (p', ∞) and (2, 2)
    let grid: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0).collect();
    for &y in &grid {
        let q0 = from_inv(y);
        hi = hi.min(identity_norm(c, p, 1.0) * corner(1.0, y) * identity_norm(r, q0, q));
    }
    for &x in &grid {
        let p0 = from_inv(x);
        hi = hi.min(identity_norm(c, p, p0) * corner(x, 0.0) * identity_norm(r, f64::INFINITY, q));
    }
    hi = hi.min(identity_norm(c, p, 2.0) * corner(0.5, 0.5) * identity_norm(r, 2.0, q));
    // Riesz–Thorin along segments from the edge x = 1 or the point (1/2, 1/2)
    // through the target to the edge y = 0
    let mut anchors: Vec<(f64, f64)> = grid.iter().map(|&a| (1.0, a)).collect();
    anchors.push((0.5, 0.5));
    for (ax, ay) in anchors {
        if ay <= ty {
            continue;
        }
        let t = ay / (ay - ty);
        let bx = ax + t * (tx - ax);
        if !(0.0..=1.0).contains(&bx) {
            continue;
        }
        let theta = 1.0 / t;
        let bound = corner(ax, ay).powf(1.0 - theta) * corner(bx, 0.0).powf(theta);
        hi = hi.min(bound);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo: f64 = 0.0;
    let mut try_vec = |x: &DVector<f64>| {
        let n = vec_norm(x.as_slice(), p);
        if n > 0.0 {
            let y = m * x;
            lo = lo.max(vec_norm(y.as_slice(), q) / n);
        }
    };
    for j in 0..c {
        let mut e = DVector::zeros(c);
        e[j] = 1.0;
        try_vec(&e);
    }
    for _ in 0..1000 {
        let x = DVector::from_fn(c, |_, _| rng.gen_range(-1.0..1.0));
        try_vec(&x);
    }
    Ok(OperatorNorm::Bracket { lo, hi: hi.max(lo) })
}

/// `#{i : 2σ_i > ε}`; a tie `2σ = ε` is not counted.
pub fn ldim_from_sigma(sigma: &[f64], eps: f64) -> usize {
    sigma.iter().filter(|&&s| 2.0 * s > eps).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LdimBracket {
    pub lo: usize,
    pub hi: usize,
}

/// Spectral data of a window body, computed once and queried per ε.
#[derive(Debug, Clone)]
pub struct BodyAnalysis {
    p: f64,
    kind: BodyKind,
}

#[derive(Debug, Clone)]
enum BodyKind {
    /// `span ∩ B_p`: ldim is the rank below 2 and zero from 2 on.
    SubspaceBall { rank: usize },
    Lifted(Box<LiftedBody>),
}

#[derive(Debug, Clone)]
struct LiftedBody {
    /// Semi-axes of the Euclidean surrogate body, descending.
    sigma: Vec<f64>,
    rank: usize,
    /// Multipliers converting p-diameters to Euclidean thresholds.
    up: f64,
    lo: f64,
    /// `cut[k]`: diameter bound after cutting the top `k` directions.
    cut: Vec<f64>,
    /// Nonincreasing inscribed-ball diameters for coordinate prefixes.
    coordinate: Vec<f64>,
}

impl BodyAnalysis {
    pub fn new(model: &WindowModel) -> Self {
        let p = model.p;
        let kind = match &model.lift {
            None => BodyKind::SubspaceBall {
                rank: linalg::rank(&model.generators),
            },
            Some(_) => BodyKind::Lifted(Box::new(lifted(model))),
        };
        BodyAnalysis { p, kind }
    }

    /// Semi-axes of the Euclidean body: the body itself when `p = 2`.
    pub fn sigma(&self) -> Vec<f64> {
        match &self.kind {
            BodyKind::SubspaceBall { rank } => vec![1.0; *rank],
            BodyKind::Lifted(b) => b.sigma.clone(),
        }
    }

    pub fn rank(&self) -> usize {
        match &self.kind {
            BodyKind::SubspaceBall { rank } => *rank,
            BodyKind::Lifted(b) => b.rank,
        }
    }

    pub fn bracket(&self, eps: f64) -> LdimBracket {
        if eps >= 2.0 {
            return LdimBracket { lo: 0, hi: 0 };
        }
        match &self.kind {
            BodyKind::SubspaceBall { rank } => LdimBracket { lo: *rank, hi: *rank },
            BodyKind::Lifted(b) => {
                if self.p == 2.0 {
                    let k = ldim_from_sigma(&b.sigma, eps);
                    return LdimBracket { lo: k, hi: k };
                }
                let hi_conv = ldim_from_sigma(&b.sigma, eps / b.up);
                let hi_cut = b.cut.iter().position(|&d| d <= eps).unwrap_or(b.rank);
                let lo_conv = ldim_from_sigma(&b.sigma, eps / b.lo);
                let lo_coord = b.coordinate.iter().filter(|&&d| d > eps).count();
                let hi = hi_conv.min(hi_cut).min(b.rank);
                let lo = lo_conv.max(lo_coord).min(hi);
                LdimBracket { lo, hi }
            }
        }
    }
}

fn block_count(rows: impl Iterator<Item = usize>, block: usize) -> usize {
    let mut blocks: Vec<usize> = rows.map(|r| r / block).collect();
    blocks.sort_unstable();
    blocks.dedup();
    blocks.len()
}

fn lifted(model: &WindowModel) -> LiftedBody {
    let lift = model.lift.as_ref().expect("lifted model");
    let p = model.p;
    let block = model.block();
    let full = &lift.full;
    let mut window_row = vec![usize::MAX; full.nrows()];
    for (i, &r) in lift.restrict.iter().enumerate() {
        window_row[r] = i;
    }

    struct Piece {
        sigma: Vec<f64>,
        u: DMatrix<f64>,
        rows: Vec<usize>,
        preimages: Option<DMatrix<f64>>,
        full_rows: Vec<usize>,
    }
    let mut pieces = Vec::new();
    let mut support_rows = Vec::new();
    for (rows, cols) in linalg::components(full) {
        support_rows.extend_from_slice(&rows);
        let f = linalg::submatrix(full, &rows, &cols);
        let q = linalg::column_basis(&f);
        let local: Vec<usize> = (0..rows.len()).filter(|&i| window_row[rows[i]] != usize::MAX).collect();
        if local.is_empty() || q.ncols() == 0 {
            continue;
        }
        let m = DMatrix::from_fn(local.len(), q.ncols(), |i, j| q[(local[i], j)]);
        let s = linalg::svd(&m);
        let preimages = (p != 2.0).then(|| {
            // min-ℓ² lifts of every window coordinate direction in the range
            let k = linalg::numerical_rank(&s.sigma);
            let vs = DMatrix::from_fn(s.v.nrows(), k, |i, j| s.v[(i, j)] / s.sigma[j]);
            let ut = s.u.columns(0, k).transpose();
            &q * vs * ut
        });
        pieces.push(Piece {
            sigma: s.sigma,
            u: s.u,
            rows: local.iter().map(|&i| window_row[rows[i]]).collect(),
            preimages,
            full_rows: rows,
        });
    }

    let mut order: Vec<(f64, usize, usize)> = pieces
        .iter()
        .enumerate()
        .flat_map(|(c, pc)| pc.sigma.iter().enumerate().map(move |(i, &s)| (s, c, i)))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let sigma: Vec<f64> = order.iter().map(|o| o.0).collect();
    let rank = linalg::numerical_rank(&sigma);

    let m_blocks = block_count(support_rows.iter().copied(), block).max(1) as f64;
    let n_blocks = block_count(
        pieces.iter().flat_map(|pc| pc.rows.iter().copied()),
        block,
    )
    .max(1) as f64;
    let (c_up, c_lo, d_up, d_lo) = if p <= 2.0 {
        (1.0, m_blocks.powf(0.5 - inv(p)), n_blocks.powf(inv(p) - 0.5), 1.0)
    } else {
        (m_blocks.powf(0.5 - inv(p)), 1.0, 1.0, n_blocks.powf(inv(p) - 0.5))
    };

    let mut body = LiftedBody {
        sigma,
        rank,
        up: c_up * d_up,
        lo: c_lo * d_lo,
        cut: Vec::new(),
        coordinate: Vec::new(),
    };
    if p == 2.0 {
        return body;
    }

    // tail energy per window block after removing the top-k directions
    let nb = model.window.len() * model.fiber_blocks;
    let r = order.len();
    let mut tail = vec![0.0f64; nb];
    let mut cut = vec![0.0; r + 1];
    let norm_of = |t: &[f64]| -> f64 {
        if p.is_infinite() {
            t.iter().fold(0.0f64, |a, &x| a.max(x.sqrt()))
        } else {
            t.iter().map(|&x| x.powf(p / 2.0)).sum::<f64>().powf(1.0 / p)
        }
    };
    cut[r] = 0.0;
    for k in (0..r).rev() {
        let (s, c, i) = order[k];
        let pc = &pieces[c];
        for (li, &row) in pc.rows.iter().enumerate() {
            let u = pc.u[(li, i)];
            tail[row / block] += s * s * u * u;
        }
        cut[k] = 2.0 * c_up * norm_of(&tail);
    }
    body.cut = cut;

    // inscribed coordinate cross-polytope
    let mut costs: Vec<(f64, usize)> = Vec::new();
    for pc in &pieces {
        let Some(w) = &pc.preimages else { continue };
        for (li, &row) in pc.rows.iter().enumerate() {
            let hit: f64 = (0..pc.u.ncols())
                .filter(|&j| pc.sigma[j] > linalg::RANK_TOL * pc.sigma[0])
                .map(|j| pc.u[(li, j)].powi(2))
                .sum();
            if (1.0 - hit).abs() > 1e-9 {
                continue;
            }
            let mut energy: std::collections::BTreeMap<usize, f64> = Default::default();
            for (fi, &frow) in pc.full_rows.iter().enumerate() {
                let t = w[(fi, li)];
                if t != 0.0 {
                    *energy.entry(frow / block).or_insert(0.0) += t * t;
                }
            }
            let e: Vec<f64> = energy.into_values().collect();
            costs.push((norm_of(&e), row));
        }
    }
    costs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let pc = conjugate(p);
    let mut counts = vec![0usize; nb];
    let mut coordinate = Vec::with_capacity(costs.len());
    let mut kappa_acc = 0.0f64;
    for (cost, row) in costs {
        let b = &mut counts[row / block];
        let old = (*b as f64).sqrt();
        *b += 1;
        let new = (*b as f64).sqrt();
        let kappa = if pc.is_infinite() {
            kappa_acc = kappa_acc.max(new);
            kappa_acc
        } else {
            kappa_acc += new.powf(pc) - old.powf(pc);
            kappa_acc.powf(1.0 / pc)
        };
        coordinate.push(2.0 / (cost * kappa));
    }
    // keep the sequence nonincreasing so counts are monotone in ε
    for k in 1..coordinate.len() {
        coordinate[k] = coordinate[k].min(coordinate[k - 1]);
    }
    body.coordinate = coordinate;
    body
}

/// Exact ldim of a `p = 2` body by counting semi-axes.
pub fn ldim_hilbert(model: &WindowModel, eps: f64) -> Result<usize> {
    if model.p != 2.0 {
        return Err(capability("ldim_hilbert requires p = 2"));
    }
    Ok(BodyAnalysis::new(model).bracket(eps).lo)
}

/// Certified bracket on ldim at the model's exponent.
pub fn ldim_bracket(model: &WindowModel, eps: f64) -> LdimBracket {
    BodyAnalysis::new(model).bracket(eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Width {
    Exact { value: usize },
    Bracket { lo: usize, hi: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthQuartet {
    pub bdim: Width,
    pub ldim: Width,
    pub tdim: Width,
    pub cdim: Width,
    pub epsilon: f64,
    pub p: f64,
}

/// The four widths of the ellipsoid with semi-axes `sigma`.
pub fn quartet_from_sigma(sigma: &[f64], eps: f64) -> WidthQuartet {
    let ge = sigma.iter().filter(|&&s| s >= eps).count();
    let gt = sigma.iter().filter(|&&s| s > eps).count();
    WidthQuartet {
        bdim: Width::Exact { value: ge },
        ldim: Width::Exact {
            value: ldim_from_sigma(sigma, eps),
        },
        tdim: Width::Exact { value: ge },
        cdim: Width::Exact { value: gt },
        epsilon: eps,
        p: 2.0,
    }
}

/// `bdim_{2ε} ≤ ldim_ε ≤ cdim_{ε/2}` for the ellipsoid `sigma`.
pub fn width_chain_holds(sigma: &[f64], eps: f64) -> bool {
    let exact = |w: Width| match w {
        Width::Exact { value } => value,
        Width::Bracket { .. } => unreachable!("p = 2 widths are exact"),
    };
    let b = exact(quartet_from_sigma(sigma, 2.0 * eps).bdim);
    let l = exact(quartet_from_sigma(sigma, eps).ldim);
    let c = exact(quartet_from_sigma(sigma, eps / 2.0).cdim);
    b <= l && l <= c
}

pub fn four_widths(model: &WindowModel, eps: f64) -> Result<WidthQuartet> {
    if model.p != 2.0 {
        return Err(capability(
            "the width quartet is only computed at p = 2; use ldim_bracket otherwise",
        ));
    }
    let q = quartet_from_sigma(&BodyAnalysis::new(model).sigma(), eps);
    debug_assert!(width_chain_holds(&BodyAnalysis::new(model).sigma(), eps));
    Ok(q)
}

/// Componentwise `|t|^{p-2} t`, with `0 ↦ 0`.
pub fn mazur(f: &[f64], p: f64) -> Result<Vec<f64>> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(argument(format!("the Mazur map needs p in (1, ∞), got {p}")));
    }
    Ok(f.iter().map(|&t| mazur_scalar(t, p)).collect())
}

fn mazur_scalar(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(p - 1.0) * t.signum()
    }
}

/// Duality map used in the optimality certificate of [`nearest_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualityMap {
    #[default]
    Mazur,
    /// Drops the sign of the Mazur map; only for fault-injection runs.
    FaultySign,
}

impl DualityMap {
    /// Blockwise `‖x_b‖^{p-2} x_b`.
    fn apply(self, x: &[f64], block: usize, p: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        for b in x.chunks(block) {
            let n = b.iter().map(|t| t * t).sum::<f64>().sqrt();
            let scale = if n == 0.0 { 0.0 } else { n.powf(p - 2.0) };
            match self {
                DualityMap::Mazur => out.extend(b.iter().map(|t| t * scale)),
                DualityMap::FaultySign => out.extend(b.iter().map(|t| t.abs() * scale)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    #[serde(default)]
    pub duality: DualityMap,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-8,
            max_iterations: 10_000,
            duality: DualityMap::Mazur,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(argument("solver tolerance must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(argument("solver needs at least one iteration"));
        }
        Ok(())
    }
}

/// A linear subspace given by spanning columns, optionally intersected with
/// the unit ball. Coordinates group into Euclidean blocks of size `block`.
#[derive(Debug, Clone)]
pub struct Feasible {
    pub span: DMatrix<f64>,
    pub ball: bool,
    pub block: usize,
}

impl Feasible {
    pub fn subspace(span: DMatrix<f64>) -> Self {
        Feasible {
            span,
            ball: false,
            block: 1,
        }
    }

    pub fn subspace_ball(span: DMatrix<f64>) -> Self {
        Feasible {
            span,
            ball: true,
            block: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    /// `max_b |⟨μ(t − x) − λ μ(x), b⟩|` over an orthonormal basis of the span.
    pub residual: f64,
    /// Multiplier of the ball constraint; zero when inactive.
    pub multiplier: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    q: &'a DMatrix<f64>,
    target: &'a DVector<f64>,
    p: f64,
    block: usize,
    lambda: f64,
}

impl Problem<'_> {
    fn point(&self, c: &DVector<f64>) -> DVector<f64> {
        self.q * c
    }

    fn objective(&self, c: &DVector<f64>) -> f64 {
        let x = self.point(c);
        let r = self.target - &x;
        let mut v = linalg::block_norm_pow(r.as_slice(), self.block, self.p);
        if self.lambda > 0.0 {
            v += self.lambda * linalg::block_norm_pow(x.as_slice(), self.block, self.p);
        }
        v / self.p
    }

    /// Stationarity vector `Qᵀ(μ(t − x) − λ μ(x))`, the negative gradient.
    fn stationarity(&self, c: &DVector<f64>, map: DualityMap) -> DVector<f64> {
        let x = self.point(c);
        let r = self.target - &x;
        let mut g = DVector::from_vec(map.apply(r.as_slice(), self.block, self.p));
        if self.lambda > 0.0 {
            g -= DVector::from_vec(map.apply(x.as_slice(), self.block, self.p)) * self.lambda;
        }
        self.q.transpose() * g
    }

    fn hessian(&self, c: &DVector<f64>) -> DMatrix<f64> {
        let x = self.point(c);
        let r = self.target - &x;
        let n = x.len();
        let floor = 1e-12 * r.amax().max(x.amax()).max(1e-300);
        let mut weights = DMatrix::zeros(n, n);
        let mut add = |v: &DVector<f64>, scale: f64| {
            for (bi, b) in v.as_slice().chunks(self.block).enumerate() {
                let nrm = b.iter().map(|t| t * t).sum::<f64>().sqrt().max(floor);
                let base = nrm.powf(self.p - 2.0) * scale;
                for i in 0..self.block {
                    for j in 0..self.block {
                        let mut w = (self.p - 2.0) * b[i] * b[j] / (nrm * nrm);
                        if i == j {
                            w += 1.0;
                        }
                        weights[(bi * self.block + i, bi * self.block + j)] += base * w;
                    }
                }
            }
        };
        add(&r, 1.0);
        if self.lambda > 0.0 {
            add(&x, self.lambda);
        }
        self.q.transpose() * weights * self.q
    }
}

/// Damped Newton descent with backtracking (halving) on a smooth convex
/// objective, stopped by the first-order certificate.
fn minimize(problem: &Problem, start: DVector<f64>, settings: &SolverSettings) -> (DVector<f64>, usize, bool) {
    let mut c = start;
    let mut value = problem.objective(&c);
    for it in 0..settings.max_iterations {
        let g = problem.stationarity(&c, DualityMap::Mazur);
        if g.amax() <= settings.tolerance * 1e-2 {
            return (c, it, true);
        }
        let h = problem.hessian(&c);
        let step = h.clone().cholesky().map(|ch| ch.solve(&g)).unwrap_or_else(|| g.clone());
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let trial = &c + &step * t;
            let v = problem.objective(&trial);
            // near the optimum the objective stops resolving progress, so a
            // step that shrinks the gradient without raising it is accepted
            let flat = v <= value + 1e-13 * value.abs()
                && problem.stationarity(&trial, DualityMap::Mazur).amax() < g.amax();
            if v < value || flat {
                c = trial;
                value = v;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            // descent stalled at machine precision
            return (c, it, g.amax() <= settings.tolerance);
        }
    }
    let ok = problem.stationarity(&c, DualityMap::Mazur).amax() <= settings.tolerance;
    (c, settings.max_iterations, ok)
}

/// Nearest point to `target` in `feasible` for the ℓ^p distance, `1 < p < ∞`.
pub fn nearest_point(target: &[f64], feasible: &Feasible, p: f64, settings: &SolverSettings) -> Result<Projection> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(argument(format!("nearest_point needs p in (1, ∞), got {p}")));
    }
    settings.validate()?;
    let n = target.len();
    if feasible.span.nrows() != n || feasible.block == 0 || n % feasible.block != 0 {
        return Err(crate::error::structural("feasible set does not match the target"));
    }
    let q = linalg::column_basis(&feasible.span);
    let t = DVector::from_column_slice(target);
    if q.ncols() == 0 {
        return Ok(Projection {
            point: vec![0.0; n],
            residual: 0.0,
            multiplier: 0.0,
            iterations: 0,
        });
    }
    let mut problem = Problem {
        q: &q,
        target: &t,
        p,
        block: feasible.block,
        lambda: 0.0,
    };
    let start = q.transpose() * &t;
    let (mut c, mut iterations, mut ok) = minimize(&problem, start, settings);
    let norm = |c: &DVector<f64>| block_norm((&q * c).as_slice(), feasible.block, p);
    if feasible.ball && norm(&c) > 1.0 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        loop {
            problem.lambda = hi;
            let (ch, it, o) = minimize(&problem, c.clone(), settings);
            iterations += it;
            if norm(&ch) <= 1.0 || hi > 1e12 {
                c = ch;
                ok = o;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            if (norm(&c) - 1.0).abs() <= 1e-12 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            problem.lambda = mid;
            let (cm, it, o) = minimize(&problem, c.clone(), settings);
            iterations += it;
            ok = o;
            if norm(&cm) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            c = cm;
        }
    }
    let residual = problem.stationarity(&c, settings.duality).amax();
    if !ok && residual > settings.tolerance {
        return Err(Error::Numerical { iterations, residual });
    }
    Ok(Projection {
        point: (&q * &c).iter().copied().collect(),
        residual,
        multiplier: problem.lambda,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDefect {
    /// `max_i ‖L e_i − e_i‖_p`.
    pub eps: f64,
    pub nullity: usize,
    pub n: usize,
    /// `nullity ≤ ε² N`.
    pub ok: bool,
}

/// Checks that an almost-identity matrix has a small kernel.
pub fn kernel_defect_check(l: &DMatrix<f64>, p: f64) -> Result<KernelDefect> {
    if !(1.0..=2.0).contains(&p) {
        return Err(argument(format!("kernel defect check needs p in [1, 2], got {p}")));
    }
    let n = l.nrows();
    if l.ncols() != n {
        return Err(crate::error::structural("kernel defect check needs a square matrix"));
    }
    let mut eps: f64 = 0.0;
    for i in 0..n {
        let mut col: Vec<f64> = l.column(i).iter().copied().collect();
        col[i] -= 1.0;
        eps = eps.max(vec_norm(&col, p));
    }
    let nullity = n - linalg::rank(l);
    let ok = nullity as f64 <= eps * eps * n as f64 + 1e-9;
    Ok(KernelDefect { eps, nullity, n, ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{FiniteSubset, GroupSpec};
    use crate::spaces::{inner_window_model, SubspaceSpec};
    use approx::assert_relative_eq;

    #[test]
    fn entrywise_examples() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert_relative_eq!(entrywise_norm(&id, 2.0).unwrap(), 5f64.sqrt());
        assert!(entrywise_norm(&id, 0.5).is_err());
    }

    #[test]
    fn operator_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let n = operator_norm(&id, p, p, 1).unwrap();
            assert!(n.lo() <= 1.0 + 1e-12 && n.hi() >= 1.0 - 1e-12);
            assert_relative_eq!(n.lo(), 1.0, epsilon = 1e-12);
        }
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(operator_norm(&m, 1.0, 1.0, 0).unwrap(), OperatorNorm::Exact { value: 1.0 });
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(operator_norm(&d, 2.0, 2.0, 0).unwrap().lo(), 3.0, epsilon = 1e-12);
        assert!(operator_norm(&d, 0.0, 2.0, 0).is_err());
    }

    #[test]
    fn operator_bracket_contains_sampled_value() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.5, 0.0, 1.0, 1.0, 2.0, 0.0, -1.0]);
        let b = operator_norm(&m, 3.0, 1.5, 7).unwrap();
        assert!(b.lo() > 0.0 && b.lo() <= b.hi());
        // a power-type iterate can only reach values below the upper bound
        let x = DVector::from_column_slice(&[0.3, -0.9, 0.4]);
        let ratio = vec_norm((&m * &x).as_slice(), 1.5) / vec_norm(x.as_slice(), 3.0);
        assert!(ratio <= b.hi() + 1e-12);
    }

    #[test]
    fn identity_comparisons() {
        assert_relative_eq!(identity_norm(4, 2.0, 1.0), 2.0, epsilon = 1e-12);
        assert_eq!(identity_norm(4, 1.0, 2.0), 1.0);
        assert_relative_eq!(identity_norm(8, f64::INFINITY, 3.0), 2.0, epsilon = 1e-12);
        // ‖(1,1,1,1)‖₁ = 2 ‖(1,1,1,1)‖₂
        let x = [1.0; 4];
        assert_relative_eq!(vec_norm(&x, 1.0) / vec_norm(&x, 2.0), identity_norm(4, 2.0, 1.0));
    }

    #[test]
    fn sigma_count_examples() {
        assert_eq!(ldim_from_sigma(&[1.0, 1.0, 0.4, 0.1], 0.5), 3);
        assert_eq!(ldim_from_sigma(&[1.0, 0.4], 2.0), 0);
        // tie 2σ = ε is not counted
        assert_eq!(ldim_from_sigma(&[0.25], 0.5), 0);
    }

    #[test]
    fn quartet_examples() {
        let s = [1.0, 0.4, 0.1];
        let q = quartet_from_sigma(&s, 0.4);
        assert_eq!(q.bdim, Width::Exact { value: 2 });
        assert_eq!(q.cdim, Width::Exact { value: 1 });
        assert!(width_chain_holds(&s, 0.4));
        let q = quartet_from_sigma(&s, 1.5);
        assert_eq!(q.bdim, Width::Exact { value: 0 });
        assert_eq!(q.cdim, Width::Exact { value: 0 });
        let ones = [1.0; 4];
        let q = quartet_from_sigma(&ones, 0.5);
        for w in [q.bdim, q.ldim, q.tdim, q.cdim] {
            assert_eq!(w, Width::Exact { value: 4 });
        }
    }

    #[test]
    fn exact_ball_ldim() {
        let z = GroupSpec::integers();
        let w = FiniteSubset::interval(&z, 0, 5).unwrap();
        let m = inner_window_model(&SubspaceSpec::Full { dim: 1 }, &w, 2.0).unwrap();
        assert_eq!(ldim_hilbert(&m, 1.9).unwrap(), 5);
        assert_eq!(ldim_hilbert(&m, 2.0).unwrap(), 0);
        let m1 = inner_window_model(&SubspaceSpec::Full { dim: 1 }, &w, 1.0).unwrap();
        assert!(ldim_hilbert(&m1, 1.0).is_err());
        assert_eq!(ldim_bracket(&m1, 1.0), LdimBracket { lo: 5, hi: 5 });
    }

    #[test]
    fn mazur_examples() {
        assert_eq!(mazur(&[0.3, -2.0], 2.0).unwrap(), vec![0.3, -2.0]);
        assert_eq!(mazur(&[2.0, -1.0], 3.0).unwrap(), vec![4.0, -1.0]);
        assert_eq!(mazur(&[0.0, 0.0], 1.5).unwrap(), vec![0.0, 0.0]);
        assert!(mazur(&[1.0], 1.0).is_err());
        let f = [0.5, -1.5, 2.0];
        let m = mazur(&f, 1.7).unwrap();
        let pair: f64 = m.iter().zip(&f).map(|(a, b)| a * b).sum();
        assert_relative_eq!(pair, vec_norm(&f, 1.7).powf(1.7), epsilon = 1e-12);
    }

    #[test]
    fn nearest_point_examples() {
        let s = SolverSettings::default();
        let span = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let x = nearest_point(&[1.0, 0.0], &Feasible::subspace(span.clone()), 2.0, &s).unwrap();
        assert_relative_eq!(x.point[0], 0.5, epsilon = 1e-10);
        assert_relative_eq!(x.point[1], 0.5, epsilon = 1e-10);
        let zero = nearest_point(&[1.0, 0.0], &Feasible::subspace(DMatrix::zeros(2, 0)), 3.0, &s).unwrap();
        assert_eq!(zero.point, vec![0.0, 0.0]);
        let inside = nearest_point(&[2.0, 2.0], &Feasible::subspace(span), 3.0, &s).unwrap();
        assert_relative_eq!(inside.point[0], 2.0, epsilon = 1e-9);
        assert!(inside.residual <= 1e-8);
    }

    #[test]
    fn nearest_point_general_p() {
        let span = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        for p in [1.5, 3.0, 4.0] {
            let x = nearest_point(&[1.0, -0.5, 0.25], &Feasible::subspace(span.clone()), p, &SolverSettings::default())
                .unwrap();
            assert!(x.residual <= 1e-8, "p = {p}: residual {}", x.residual);
        }
    }

    #[test]
    fn ball_constraint_activates() {
        // the ℓ^p-nearest point on the line can leave the unit ball for p ≠ 2
        let span = DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0]);
        let t = [3.0, 0.0, 0.0];
        let s = SolverSettings::default();
        let free = nearest_point(&t, &Feasible::subspace(span.clone()), 3.0, &s).unwrap();
        assert!(vec_norm(&free.point, 3.0) > 1.0);
        let ball = nearest_point(&t, &Feasible::subspace_ball(span), 3.0, &s).unwrap();
        assert_relative_eq!(vec_norm(&ball.point, 3.0), 1.0, epsilon = 1e-9);
        assert!(ball.multiplier > 0.0);
        assert!(ball.residual <= 1e-8);
    }

    #[test]
    fn faulty_duality_map_breaks_the_certificate() {
        let span = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, -1.0]);
        let s = SolverSettings {
            duality: DualityMap::FaultySign,
            ..SolverSettings::default()
        };
        let x = nearest_point(&[1.0, -0.3, 0.7], &Feasible::subspace(span), 1.5, &s).unwrap();
        assert!(x.residual > 1e-3);
    }

    #[test]
    fn kernel_defect_examples() {
        let id = DMatrix::<f64>::identity(6, 6);
        let k = kernel_defect_check(&id, 1.0).unwrap();
        assert_eq!((k.eps, k.nullity, k.ok), (0.0, 0, true));
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, 1.0, 0.0]));
        let k = kernel_defect_check(&d, 1.0).unwrap();
        assert_eq!((k.eps, k.nullity, k.ok), (1.0, 1, true));
        assert!(kernel_defect_check(&id, 3.0).is_err());
    }
}
