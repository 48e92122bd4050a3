//! Symbolic invariant subspaces, finite-type convolution operators and
//! their windowed surrogates.
//!
//! Fibers `V = K^n` carry the Euclidean norm; vectors on a window are laid
//! out point-major with the fiber coordinates of each point contiguous.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{argument, capability, structural, Error, Result};
use crate::groups::{FiniteSubset, GroupElement, GroupSpec};
use crate::linalg::{self, block_norm};
use crate::tiling::{greedy_pack, touching};

/// A finitely supported map `Γ → K^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    group: GroupSpec,
    dim: usize,
    values: BTreeMap<GroupElement, DVector<f64>>,
}

impl Field {
    pub fn zeros(group: &GroupSpec, dim: usize) -> Self {
        Field {
            group: group.clone(),
            dim,
            values: BTreeMap::new(),
        }
    }

    /// `value * e_fiber` at `at`.
    pub fn dirac(group: &GroupSpec, dim: usize, at: GroupElement, fiber: usize, value: f64) -> Result<Self> {
        let mut f = Field::zeros(group, dim);
        let mut v = DVector::zeros(dim);
        if fiber >= dim {
            return Err(structural(format!("fiber index {fiber} out of range for dimension {dim}")));
        }
        v[fiber] = value;
        f.add_at(at, &v)?;
        Ok(f)
    }

    /// Scalar-valued field from `(element, value)` pairs.
    pub fn scalars(group: &GroupSpec, entries: impl IntoIterator<Item = (GroupElement, f64)>) -> Result<Self> {
        let mut f = Field::zeros(group, 1);
        for (g, t) in entries {
            f.add_at(g, &DVector::from_element(1, t))?;
        }
        Ok(f)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_at(&mut self, at: GroupElement, value: &DVector<f64>) -> Result<()> {
        self.group.check(&at)?;
        if value.len() != self.dim {
            return Err(structural(format!(
                "value of dimension {} added to a field of dimension {}",
                value.len(),
                self.dim
            )));
        }
        let at = self.group.element(at.coords().to_vec())?;
        let slot = self.values.entry(at).or_insert_with(|| DVector::zeros(self.dim));
        *slot += value;
        Ok(())
    }

    pub fn get(&self, at: &GroupElement) -> DVector<f64> {
        self.values.get(at).cloned().unwrap_or_else(|| DVector::zeros(self.dim))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &DVector<f64>)> {
        self.values.iter()
    }

    /// Points carrying a nonzero value.
    pub fn support(&self) -> FiniteSubset {
        FiniteSubset::new(
            &self.group,
            self.values
                .iter()
                .filter(|(_, v)| v.iter().any(|t| *t != 0.0))
                .map(|(g, _)| g.clone()),
        )
        .expect("field points belong to the group")
    }

    pub fn norm(&self, p: f64) -> f64 {
        let flat: Vec<f64> = self.values.values().flat_map(|v| v.iter().copied()).collect();
        if flat.is_empty() {
            return 0.0;
        }
        block_norm(&flat, self.dim, p)
    }

    /// `Σ_γ ⟨self(γ), other(γ)⟩`.
    pub fn pair(&self, other: &Field) -> Result<f64> {
        self.compatible(other)?;
        Ok(self
            .values
            .iter()
            .filter_map(|(g, v)| other.values.get(g).map(|w| v.dot(w)))
            .sum())
    }

    fn compatible(&self, other: &Field) -> Result<()> {
        if self.group != other.group || self.dim != other.dim {
            return Err(structural("fields live over different groups or fibers"));
        }
        Ok(())
    }

    pub fn restrict(&self, window: &FiniteSubset) -> Field {
        Field {
            group: self.group.clone(),
            dim: self.dim,
            values: self
                .values
                .iter()
                .filter(|(g, _)| window.contains(g))
                .map(|(g, v)| (g.clone(), v.clone()))
                .collect(),
        }
    }

    /// Left translate `(γ f)(η) = f(γ^-1 η)`.
    pub fn translate(&self, gamma: &GroupElement) -> Result<Field> {
        self.group.check(gamma)?;
        Ok(Field {
            group: self.group.clone(),
            dim: self.dim,
            values: self
                .values
                .iter()
                .map(|(g, v)| (self.group.compose_unchecked(gamma, g), v.clone()))
                .collect(),
        })
    }

    pub fn scale(&self, a: f64) -> Field {
        let mut f = self.clone();
        for v in f.values.values_mut() {
            *v *= a;
        }
        f
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.compatible(other)?;
        let mut f = self.clone();
        for (g, v) in &other.values {
            f.add_at(g.clone(), &(-v))?;
        }
        Ok(f)
    }

    /// Coordinates over `support`, point-major; values off `support` are dropped.
    pub fn to_vector(&self, support: &FiniteSubset) -> Vec<f64> {
        let mut out = vec![0.0; support.len() * self.dim];
        for (g, v) in &self.values {
            if let Some(i) = support.index_of(g) {
                out[i * self.dim..(i + 1) * self.dim].copy_from_slice(v.as_slice());
            }
        }
        out
    }

    pub fn from_vector(support: &FiniteSubset, dim: usize, x: &[f64]) -> Result<Field> {
        if x.len() != support.len() * dim {
            return Err(structural("coordinate vector does not match the support"));
        }
        let mut f = Field::zeros(support.owner(), dim);
        for (i, g) in support.iter().enumerate() {
            let v = &x[i * dim..(i + 1) * dim];
            if v.iter().any(|t| *t != 0.0) {
                f.values.insert(g.clone(), DVector::from_column_slice(v));
            }
        }
        Ok(f)
    }
}

/// A finitely supported operator-valued kernel `h: Γ → Hom(K^in, K^out)`
/// acting by right convolution `(h*y)(η) = Σ_γ h(γ^-1 η) y(γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct ConvolutionKernel {
    group: GroupSpec,
    support: FiniteSubset,
    blocks: Vec<DMatrix<f64>>,
    dim_in: usize,
    dim_out: usize,
}

impl ConvolutionKernel {
    pub fn new(group: &GroupSpec, entries: Vec<(GroupElement, DMatrix<f64>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(argument("a convolution kernel needs a nonempty support"));
        }
        let (dim_out, dim_in) = entries[0].1.shape();
        if dim_in == 0 || dim_out == 0 {
            return Err(structural("kernel blocks must be nonempty matrices"));
        }
        let mut map = BTreeMap::new();
        for (g, m) in entries {
            group.check(&g)?;
            if m.shape() != (dim_out, dim_in) {
                return Err(structural(format!(
                    "kernel block of shape {:?}, expected {:?}",
                    m.shape(),
                    (dim_out, dim_in)
                )));
            }
            let g = group.element(g.coords().to_vec())?;
            if map.insert(g.clone(), m).is_some() {
                return Err(argument(format!("duplicate kernel support point {g}")));
            }
        }
        let support = FiniteSubset::new(group, map.keys().cloned())?;
        Ok(ConvolutionKernel {
            group: group.clone(),
            support,
            blocks: map.into_values().collect(),
            dim_in,
            dim_out,
        })
    }

    /// Scalar kernel on a one-coordinate group from `(offset, coefficient)`.
    pub fn scalar(group: &GroupSpec, coefficients: &[(i64, f64)]) -> Result<Self> {
        let entries = coefficients
            .iter()
            .map(|&(k, c)| Ok((group.element(vec![k])?, DMatrix::from_element(1, 1, c))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(group, entries)
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn support(&self) -> &FiniteSubset {
        &self.support
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&GroupElement, &DMatrix<f64>)> {
        self.support.iter().zip(&self.blocks)
    }

    pub fn block(&self, at: &GroupElement) -> Option<&DMatrix<f64>> {
        self.support.index_of(at).map(|i| &self.blocks[i])
    }

    /// `Σ_γ ‖h(γ)‖` with the Euclidean operator norm on each block.
    pub fn l1_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| linalg::singular_values(b).first().copied().unwrap_or(0.0))
            .sum()
    }

    /// `h†(γ) = h(γ^-1)ᵀ`, the kernel of the adjoint operator.
    pub fn adjoint(&self) -> ConvolutionKernel {
        let entries = self
            .blocks()
            .map(|(g, b)| (self.group.invert_unchecked(g), b.transpose()))
            .collect();
        ConvolutionKernel::new(&self.group, entries).expect("adjoint of a valid kernel")
    }

    pub fn convolve(&self, y: &Field) -> Result<Field> {
        if y.group != self.group {
            return Err(structural("kernel and field live over different groups"));
        }
        if y.dim != self.dim_in {
            return Err(structural(format!(
                "kernel expects fiber dimension {}, field has {}",
                self.dim_in, y.dim
            )));
        }
        let mut out = Field::zeros(&self.group, self.dim_out);
        for (gamma, v) in &y.values {
            for (s, b) in self.blocks() {
                let eta = self.group.compose_unchecked(gamma, s);
                let slot = out.values.entry(eta).or_insert_with(|| DVector::zeros(self.dim_out));
                *slot += b * v;
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    support: Vec<Vec<i64>>,
    blocks: Vec<Vec<Vec<f64>>>,
}

fn default_group(arity: usize) -> Result<GroupSpec> {
    if arity == 1 {
        Ok(GroupSpec::integers())
    } else {
        GroupSpec::lattice(arity)
    }
}

fn parse_group(name: Option<&str>, arity: usize) -> Result<GroupSpec> {
    match name {
        Some(s) => s.parse(),
        None => default_group(arity),
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Parse("kernel blocks must be rectangular, nonempty matrices".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl TryFrom<KernelRepr> for ConvolutionKernel {
    type Error = Error;

    fn try_from(raw: KernelRepr) -> Result<Self> {
        if raw.support.len() != raw.blocks.len() {
            return Err(Error::Parse("kernel support and blocks differ in length".into()));
        }
        let arity = raw.support.first().map_or(1, Vec::len);
        let group = parse_group(raw.group.as_deref(), arity)?;
        let entries = raw
            .support
            .into_iter()
            .zip(&raw.blocks)
            .map(|(c, b)| Ok((group.element(c)?, matrix_from_rows(b)?)))
            .collect::<Result<Vec<_>>>()?;
        ConvolutionKernel::new(&group, entries)
    }
}

impl From<ConvolutionKernel> for KernelRepr {
    fn from(h: ConvolutionKernel) -> Self {
        KernelRepr {
            group: Some(h.group.to_string()),
            support: h.support.iter().map(|g| g.coords().to_vec()).collect(),
            blocks: h
                .blocks
                .iter()
                .map(|b| (0..b.nrows()).map(|i| b.row(i).iter().copied().collect()).collect())
                .collect(),
        }
    }
}

/// A generator `y` whose translates span a cyclic subspace, with the
/// declared shape `F` and tail bound `‖y‖_{ℓp(F^c)} ≤ ε₀` (for normalized `y`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorRepr", into = "GeneratorRepr")]
pub struct Generator {
    pub values: Field,
    pub shape: FiniteSubset,
    pub eps0: f64,
}

impl Generator {
    pub fn new(values: Field, shape: FiniteSubset, eps0: f64) -> Result<Self> {
        if shape.owner() != values.group() {
            return Err(structural("generator shape and values live in different groups"));
        }
        if shape.is_empty() {
            return Err(argument("generator shape must be nonempty"));
        }
        if values.support().is_empty() {
            return Err(argument("generator must be nonzero"));
        }
        if !(eps0 > 0.0 && eps0 < 1.0) {
            return Err(argument(format!("tail bound must lie in (0, 1), got {eps0}")));
        }
        Ok(Generator { values, shape, eps0 })
    }

    /// `y ∝ r^k` on `[0, len)` with `r = eps0^(1/|F|)`, `F = [0, shape_len)`.
    ///
    /// After ℓ^p normalisation the mass outside `F` is at most `eps0` for
    /// every `p`, since the tail ratio is `r^{|F|}` times a factor below one.
    pub fn truncated_geometric(shape_len: usize, len: usize, eps0: f64) -> Result<Self> {
        if shape_len == 0 || len < shape_len {
            return Err(argument("truncated geometric generator needs 0 < |F| <= length"));
        }
        let z = GroupSpec::integers();
        let r = eps0.powf(1.0 / shape_len as f64);
        let values = Field::scalars(&z, (0..len as i64).map(|k| (GroupElement::integer(k), r.powi(k as i32))))?;
        Self::new(values, FiniteSubset::interval(&z, 0, shape_len as i64)?, eps0)
    }

    pub fn group(&self) -> &GroupSpec {
        self.values.group()
    }

    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    /// The generator scaled to unit ℓ^p norm.
    pub fn normalized(&self, p: f64) -> Field {
        self.values.scale(1.0 / self.values.norm(p))
    }

    /// `‖y/‖y‖_p‖_{ℓp(F^c)}`.
    pub fn tail(&self, p: f64) -> f64 {
        let y = self.normalized(p);
        let outside: Vec<GroupElement> = y.support().iter().filter(|g| !self.shape.contains(g)).cloned().collect();
        let outside = FiniteSubset::new(self.group(), outside).expect("same group");
        y.restrict(&outside).norm(p)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FiberValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct GeneratorRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    group: Option<String>,
    /// Keys are comma-separated coordinates, e.g. `"3"` or `"1,-2"`.
    generator: BTreeMap<String, FiberValue>,
    shape: Vec<Vec<i64>>,
    eps0: f64,
}

fn parse_key(key: &str) -> Result<Vec<i64>> {
    key.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad coordinate key {key:?}"))))
        .collect()
}

impl TryFrom<GeneratorRepr> for Generator {
    type Error = Error;

    fn try_from(raw: GeneratorRepr) -> Result<Self> {
        let arity = raw.shape.first().map_or(1, Vec::len);
        let group = parse_group(raw.group.as_deref(), arity)?;
        let dim = match raw.generator.values().next() {
            Some(FiberValue::Vector(v)) => v.len(),
            _ => 1,
        };
        let mut values = Field::zeros(&group, dim);
        for (key, value) in &raw.generator {
            let v = match value {
                FiberValue::Scalar(t) => vec![*t],
                FiberValue::Vector(v) => v.clone(),
            };
            values.add_at(group.element(parse_key(key)?)?, &DVector::from_vec(v))?;
        }
        let shape = FiniteSubset::from_coords(&group, raw.shape)?;
        Generator::new(values, shape, raw.eps0)
    }
}

impl From<Generator> for GeneratorRepr {
    fn from(g: Generator) -> Self {
        let generator = g
            .values
            .iter()
            .map(|(k, v)| {
                let key = k.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(",");
                let value = if v.len() == 1 {
                    FiberValue::Scalar(v[0])
                } else {
                    FiberValue::Vector(v.iter().copied().collect())
                };
                (key, value)
            })
            .collect();
        GeneratorRepr {
            group: Some(g.group().to_string()),
            generator,
            shape: g.shape.iter().map(|e| e.coords().to_vec()).collect(),
            eps0: g.eps0,
        }
    }
}

/// Symbolic description of a translation-invariant subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubspaceSpec {
    Full {
        dim: usize,
    },
    Zero {
        dim: usize,
    },
    ConvKernel(ConvolutionKernel),
    ConvImage(ConvolutionKernel),
    #[serde(rename = "cyclic")]
    CyclicTranslates(Generator),
    DirectSum {
        left: Box<SubspaceSpec>,
        right: Box<SubspaceSpec>,
    },
    /// Sequences of period `n` on `Z`, meaningful at `p = ∞`.
    PeriodicInfty {
        period: u64,
    },
    /// Closed span of all periodic sequences on `Z`, at `p = ∞`.
    PeriodicUnion,
    /// Kernel of the periodization `y ↦ Σ_i y(· + n i)` on `ℓ¹(Z)`.
    KerPeriodization {
        period: u64,
    },
    Annihilator {
        inner: Box<SubspaceSpec>,
    },
    Reduced {
        inner: Box<SubspaceSpec>,
        index: usize,
    },
    Induced {
        inner: Box<SubspaceSpec>,
        index: usize,
    },
}

impl SubspaceSpec {
    pub fn direct_sum(a: SubspaceSpec, b: SubspaceSpec) -> Self {
        SubspaceSpec::DirectSum {
            left: Box::new(a),
            right: Box::new(b),
        }
    }

    pub fn annihilator(inner: SubspaceSpec) -> Self {
        SubspaceSpec::Annihilator { inner: Box::new(inner) }
    }

    /// Dimension of the fiber `V`.
    pub fn fiber_dim(&self) -> usize {
        match self {
            SubspaceSpec::Full { dim } | SubspaceSpec::Zero { dim } => *dim,
            SubspaceSpec::ConvKernel(h) => h.dim_in,
            SubspaceSpec::ConvImage(h) => h.dim_out,
            SubspaceSpec::CyclicTranslates(g) => g.dim(),
            SubspaceSpec::DirectSum { left, right } => left.fiber_dim() + right.fiber_dim(),
            SubspaceSpec::PeriodicInfty { .. } | SubspaceSpec::PeriodicUnion | SubspaceSpec::KerPeriodization { .. } => 1,
            SubspaceSpec::Annihilator { inner } | SubspaceSpec::Induced { inner, .. } => inner.fiber_dim(),
            SubspaceSpec::Reduced { inner, index } => inner.fiber_dim() * index,
        }
    }

    /// Short variant name used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            SubspaceSpec::Full { .. } => "full",
            SubspaceSpec::Zero { .. } => "zero",
            SubspaceSpec::ConvKernel(_) => "conv_kernel",
            SubspaceSpec::ConvImage(_) => "conv_image",
            SubspaceSpec::CyclicTranslates(_) => "cyclic",
            SubspaceSpec::DirectSum { .. } => "direct_sum",
            SubspaceSpec::PeriodicInfty { .. } => "periodic_infty",
            SubspaceSpec::PeriodicUnion => "periodic_union",
            SubspaceSpec::KerPeriodization { .. } => "ker_periodization",
            SubspaceSpec::Annihilator { .. } => "annihilator",
            SubspaceSpec::Reduced { .. } => "reduced",
            SubspaceSpec::Induced { .. } => "induced",
        }
    }
}

/// The annihilator in closed form, for the families where one is known.
pub fn annihilator_spec(spec: &SubspaceSpec) -> Result<SubspaceSpec> {
    Ok(match spec {
        SubspaceSpec::Full { dim } => SubspaceSpec::Zero { dim: *dim },
        SubspaceSpec::Zero { dim } => SubspaceSpec::Full { dim: *dim },
        SubspaceSpec::ConvImage(h) => SubspaceSpec::ConvKernel(h.adjoint()),
        SubspaceSpec::ConvKernel(h) => SubspaceSpec::ConvImage(h.adjoint()),
        SubspaceSpec::DirectSum { left, right } => {
            SubspaceSpec::direct_sum(annihilator_spec(left)?, annihilator_spec(right)?)
        }
        SubspaceSpec::Annihilator { inner } => {
            // only reached for inner specs with a closed form, where Y⊥⊥ = Y
            annihilator_spec(inner)?;
            (**inner).clone()
        }
        other => {
            return Err(capability(format!(
                "no closed-form annihilator for {} subspaces",
                other.kind()
            )))
        }
    })
}

/// Reindexes `Y ⊂ ℓ^p(Z; V)` over `dZ ≅ Z` with fiber `V^d`.
pub fn reduce_spec(spec: &SubspaceSpec, d: usize) -> Result<SubspaceSpec> {
    if d < 1 {
        return Err(argument("subgroup index must be at least 1"));
    }
    Ok(match spec {
        _ if d == 1 => spec.clone(),
        SubspaceSpec::Full { dim } => SubspaceSpec::Full { dim: dim * d },
        SubspaceSpec::Zero { dim } => SubspaceSpec::Zero { dim: dim * d },
        other => SubspaceSpec::Reduced {
            inner: Box::new(other.clone()),
            index: d,
        },
    })
}

/// The subspace of `ℓ^p(Z; V)` whose restrictions to every coset of `dZ`
/// lie in `Y`.
pub fn induce_spec(spec: &SubspaceSpec, d: usize) -> Result<SubspaceSpec> {
    if d < 1 {
        return Err(argument("subgroup index must be at least 1"));
    }
    Ok(match spec {
        _ if d == 1 => spec.clone(),
        SubspaceSpec::Full { .. } | SubspaceSpec::Zero { .. } => spec.clone(),
        other => SubspaceSpec::Induced {
            inner: Box::new(other.clone()),
            index: d,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// The modeled body lies inside the restricted unit ball of `Y`.
    Inner,
    /// The modeled body contains the restricted unit ball of `Y`.
    Outer,
    /// The modeled body is exactly the restricted unit ball of `Y`.
    ExactSubspaceBall,
}

/// Genuine subspace elements whose unit ball, restricted to the window, is
/// the modeled body.
#[derive(Debug, Clone)]
pub struct Lift {
    /// Points on which the lifted elements live; contains the window.
    pub support: FiniteSubset,
    /// Rows `support × V`, columns aligned with the model's generators.
    pub full: DMatrix<f64>,
    /// For each window row, the matching row of `full`.
    pub restrict: Vec<usize>,
}

/// Finite surrogate of the restricted unit ball of a subspace on a window.
///
/// Without a [`Lift`] the body is `span(generators) ∩ B_p(Ω)`. With one it is
/// the restriction to `Ω` of `span(full) ∩ B_p(support)`.
#[derive(Debug, Clone)]
pub struct WindowModel {
    pub window: FiniteSubset,
    pub p: f64,
    pub fiber_dim: usize,
    /// Number of Euclidean blocks each fiber splits into for the norm.
    pub fiber_blocks: usize,
    pub generators: DMatrix<f64>,
    pub column_norms: Vec<f64>,
    pub polarity: Polarity,
    pub lift: Option<Lift>,
    /// Without a lift: whether the generators are themselves subspace
    /// elements supported in the window.
    pub local: bool,
}

impl WindowModel {
    /// Size of one Euclidean block of coordinates.
    pub fn block(&self) -> usize {
        self.fiber_dim / self.fiber_blocks
    }

    pub fn ambient_dim(&self) -> usize {
        self.window.len() * self.fiber_dim
    }

    pub fn is_subspace_ball(&self) -> bool {
        self.lift.is_none()
    }

    fn empty(window: &FiniteSubset, p: f64, fiber_dim: usize, polarity: Polarity) -> Self {
        WindowModel {
            window: window.clone(),
            p,
            fiber_dim,
            fiber_blocks: 1,
            generators: DMatrix::zeros(window.len() * fiber_dim, 0),
            column_norms: Vec::new(),
            polarity,
            lift: None,
            local: true,
        }
    }

    fn dirac(window: &FiniteSubset, p: f64, fiber_dim: usize, polarity: Polarity) -> Self {
        let n = window.len() * fiber_dim;
        WindowModel {
            generators: DMatrix::identity(n, n),
            column_norms: vec![1.0; n],
            ..Self::empty(window, p, fiber_dim, polarity)
        }
    }

    /// The lifted elements as fields on the group.
    pub fn lifted_columns(&self) -> Vec<Field> {
        let (support, m) = match &self.lift {
            Some(l) => (&l.support, &l.full),
            None => (&self.window, &self.generators),
        };
        (0..m.ncols())
            .map(|j| {
                let col: Vec<f64> = m.column(j).iter().copied().collect();
                Field::from_vector(support, self.fiber_dim, &col).expect("shapes agree")
            })
            .collect()
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(argument(format!("exponent p must lie in [1, ∞], got {p}")));
    }
    Ok(())
}

fn require_integers(window: &FiniteSubset, what: &str) -> Result<()> {
    if !window.owner().is_integers() {
        return Err(capability(format!("{what} is only available over Z")));
    }
    Ok(())
}

fn require_group(window: &FiniteSubset, group: &GroupSpec) -> Result<()> {
    if window.owner() != group {
        return Err(structural(format!(
            "window lives in {} but the subspace in {}",
            window.owner(),
            group
        )));
    }
    Ok(())
}

fn normalize_columns(m: &mut DMatrix<f64>, block: usize, p: f64) -> Vec<f64> {
    let mut norms = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let col: Vec<f64> = m.column(j).iter().copied().collect();
        let n = block_norm(&col, block, p);
        if n > 0.0 {
            m.column_mut(j).scale_mut(1.0 / n);
        }
        norms.push(1.0);
    }
    norms
}

/// Matrix of `y ↦ (h*y)` from coordinates on `cols` to values on `rows`.
fn convolution_matrix(h: &ConvolutionKernel, cols: &FiniteSubset, rows: &FiniteSubset) -> DMatrix<f64> {
    let group = &h.group;
    let (di, dout) = (h.dim_in, h.dim_out);
    let mut m = DMatrix::zeros(rows.len() * dout, cols.len() * di);
    for (c, omega) in cols.iter().enumerate() {
        for (s, b) in h.blocks() {
            if let Some(r) = rows.index_of(&group.compose_unchecked(omega, s)) {
                for w in 0..dout {
                    for v in 0..di {
                        m[(r * dout + w, c * di + v)] += b[(w, v)];
                    }
                }
            }
        }
    }
    m
}

/// Columns `h*δ_{γ,v}` for `γ` in `centers`, over `support`.
fn image_columns(h: &ConvolutionKernel, centers: &FiniteSubset, support: &FiniteSubset) -> DMatrix<f64> {
    convolution_matrix(h, centers, support)
}

fn restrict_rows(window: &FiniteSubset, support: &FiniteSubset, fiber: usize) -> Vec<usize> {
    let mut rows = Vec::with_capacity(window.len() * fiber);
    for g in window {
        let i = support.index_of(g).expect("support contains the window");
        rows.extend((0..fiber).map(|v| i * fiber + v));
    }
    rows
}

fn lift_model(
    window: &FiniteSubset,
    p: f64,
    fiber_dim: usize,
    support: FiniteSubset,
    full: DMatrix<f64>,
    column_norms: Vec<f64>,
) -> WindowModel {
    debug_assert!(window.is_subset(&support));
    debug_assert_eq!(full.nrows(), support.len() * fiber_dim);
    let restrict = restrict_rows(window, &support, fiber_dim);
    let generators = DMatrix::from_fn(restrict.len(), full.ncols(), |i, j| full[(restrict[i], j)]);
    WindowModel {
        window: window.clone(),
        p,
        fiber_dim,
        fiber_blocks: 1,
        generators,
        column_norms,
        polarity: Polarity::Inner,
        lift: Some(Lift {
            support,
            full,
            restrict,
        }),
        local: false,
    }
}

fn closed_support(set: &FiniteSubset, window: &FiniteSubset) -> FiniteSubset {
    set.union(window).expect("same group")
}

/// Inner surrogate: a body contained in the restricted unit ball.
pub fn inner_window_model(spec: &SubspaceSpec, window: &FiniteSubset, p: f64) -> Result<WindowModel> {
    check_p(p)?;
    if window.is_empty() {
        return Err(argument("window must be nonempty"));
    }
    build(spec, window, p, Side::Inner)
}

/// Outer surrogate: a subspace ball containing the restricted unit ball.
pub fn outer_window_model(spec: &SubspaceSpec, window: &FiniteSubset, p: f64) -> Result<WindowModel> {
    check_p(p)?;
    if window.is_empty() {
        return Err(argument("window must be nonempty"));
    }
    build(spec, window, p, Side::Outer)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Inner,
    Outer,
}

fn build(spec: &SubspaceSpec, window: &FiniteSubset, p: f64, side: Side) -> Result<WindowModel> {
    let outer_pol = Polarity::Outer;
    match spec {
        SubspaceSpec::Full { dim } => Ok(WindowModel::dirac(
            window,
            p,
            *dim,
            if side == Side::Inner { Polarity::ExactSubspaceBall } else { outer_pol },
        )),
        SubspaceSpec::Zero { dim } => Ok(WindowModel::empty(
            window,
            p,
            *dim,
            if side == Side::Inner { Polarity::ExactSubspaceBall } else { outer_pol },
        )),
        SubspaceSpec::ConvKernel(h) => {
            require_group(window, &h.group)?;
            let block = h.dim_in;
            let mut model = WindowModel::empty(window, p, block, Polarity::Inner);
            let (rows, generators) = match side {
                // elements supported in Ω whose convolution vanishes everywhere
                Side::Inner => {
                    let rows = window.product(&h.support)?;
                    let null = linalg::null_space(&convolution_matrix(h, window, &rows));
                    (rows, null)
                }
                // constraints at rows η whose whole input stencil η F⁻¹ lies in Ω
                Side::Outer => {
                    let stencil = h.support.inverse();
                    let group = window.owner();
                    let interior: Vec<GroupElement> = window
                        .product(&h.support)?
                        .iter()
                        .filter(|eta| stencil.iter().all(|s| window.contains(&group.compose_unchecked(eta, s))))
                        .cloned()
                        .collect();
                    let rows = FiniteSubset::new(group, interior)?;
                    let null = linalg::null_space(&convolution_matrix(h, window, &rows));
                    (rows, null)
                }
            };
            let _ = rows;
            let mut generators = generators;
            model.column_norms = normalize_columns(&mut generators, block, p);
            model.generators = generators;
            if side == Side::Outer {
                model.polarity = outer_pol;
                model.local = false;
            }
            Ok(model)
        }
        SubspaceSpec::ConvImage(h) => {
            require_group(window, &h.group)?;
            let centers = touching(window, &h.support)?;
            match side {
                Side::Inner => {
                    let support = closed_support(&centers.product(&h.support)?, window);
                    let mut full = image_columns(h, &centers, &support);
                    let norms = normalize_columns(&mut full, h.dim_out, p);
                    Ok(lift_model(window, p, h.dim_out, support, full, norms))
                }
                Side::Outer => {
                    let support = closed_support(&centers.product(&h.support)?, window);
                    let full = image_columns(h, &centers, &support);
                    let restrict = restrict_rows(window, &support, h.dim_out);
                    let generators = DMatrix::from_fn(restrict.len(), full.ncols(), |i, j| full[(restrict[i], j)]);
                    Ok(span_model(window, p, h.dim_out, generators))
                }
            }
        }
        SubspaceSpec::CyclicTranslates(gen) => {
            require_group(window, gen.group())?;
            let y = gen.normalized(p);
            let ysupp = y.support();
            let centers = match side {
                Side::Inner => greedy_pack(window, &gen.shape)?.centers,
                Side::Outer => window.product(&ysupp.inverse())?,
            };
            let translates: Vec<Field> = centers.iter().map(|g| y.translate(g)).collect::<Result<_>>()?;
            let mut pts = BTreeSet::new();
            for t in &translates {
                pts.extend(t.support().iter().cloned());
            }
            let support = closed_support(&FiniteSubset::new(window.owner(), pts)?, window);
            let dim = gen.dim();
            let mut full = DMatrix::zeros(support.len() * dim, translates.len());
            for (j, t) in translates.iter().enumerate() {
                full.set_column(j, &DVector::from_vec(t.to_vector(&support)));
            }
            match side {
                Side::Inner => {
                    let norms = vec![1.0; translates.len()];
                    Ok(lift_model(window, p, dim, support, full, norms))
                }
                Side::Outer => {
                    let restrict = restrict_rows(window, &support, dim);
                    let generators = DMatrix::from_fn(restrict.len(), full.ncols(), |i, j| full[(restrict[i], j)]);
                    Ok(span_model(window, p, dim, generators))
                }
            }
        }
        SubspaceSpec::PeriodicInfty { period } => {
            require_integers(window, "the periodic subspace")?;
            if *period < 1 {
                return Err(argument("period must be at least 1"));
            }
            let pol = if side == Side::Inner { Polarity::ExactSubspaceBall } else { outer_pol };
            if p.is_finite() {
                // no nonzero periodic sequence is p-summable
                return Ok(WindowModel::empty(window, p, 1, pol));
            }
            let n = *period as i64;
            let classes: BTreeSet<i64> = window.iter().map(|g| g.coords()[0].rem_euclid(n)).collect();
            let mut generators = DMatrix::zeros(window.len(), classes.len());
            for (j, r) in classes.iter().enumerate() {
                for (i, g) in window.iter().enumerate() {
                    if g.coords()[0].rem_euclid(n) == *r {
                        generators[(i, j)] = 1.0;
                    }
                }
            }
            Ok(WindowModel {
                column_norms: vec![1.0; classes.len()],
                generators,
                local: false,
                ..WindowModel::empty(window, p, 1, pol)
            })
        }
        SubspaceSpec::PeriodicUnion => {
            require_integers(window, "the union of periodic subspaces")?;
            let pol = if side == Side::Inner { Polarity::ExactSubspaceBall } else { outer_pol };
            if p.is_finite() {
                return Ok(WindowModel::empty(window, p, 1, pol));
            }
            // every vector on a finite window extends to a periodic sequence
            // of period |Ω| with the same sup norm
            let mut model = WindowModel::dirac(window, p, 1, pol);
            model.local = false;
            Ok(model)
        }
        SubspaceSpec::KerPeriodization { period } => {
            require_integers(window, "the periodization kernel")?;
            if *period < 1 {
                return Err(argument("period must be at least 1"));
            }
            if side == Side::Outer {
                return Ok(span_model(
                    window,
                    p,
                    1,
                    DMatrix::identity(window.len(), window.len()),
                ));
            }
            let shift = GroupElement::integer(*period as i64);
            let partners = window.translate(&shift)?;
            let support = window.union(&partners)?;
            let mut full = DMatrix::zeros(support.len(), window.len());
            for (j, g) in window.iter().enumerate() {
                let partner = window.owner().compose_unchecked(g, &shift);
                full[(support.index_of(g).unwrap(), j)] += 0.5;
                full[(support.index_of(&partner).unwrap(), j)] -= 0.5;
            }
            let norm = 0.5 * block_norm(&[1.0, 1.0], 1, p);
            let norms = vec![norm; window.len()];
            Ok(lift_model(window, p, 1, support, full, norms))
        }
        SubspaceSpec::DirectSum { left, right } => {
            let a = build(left, window, p, side)?;
            let b = build(right, window, p, side)?;
            let (fa, fb) = (a.fiber_dim, b.fiber_dim);
            if a.fiber_blocks != 1 || b.fiber_blocks != 1 {
                return Err(capability("direct sums of reduced subspaces are not modeled"));
            }
            let parts = vec![
                Part {
                    model: a,
                    point: Box::new(|g: &GroupElement| g.clone()),
                    fiber_offset: 0,
                },
                Part {
                    model: b,
                    point: Box::new(|g: &GroupElement| g.clone()),
                    fiber_offset: fa,
                },
            ];
            combine(window, p, fa + fb, 1, parts, side, false)
        }
        SubspaceSpec::Annihilator { inner } => build(&annihilator_spec(inner)?, window, p, side),
        SubspaceSpec::Reduced { inner, index } => {
            require_integers(window, "reduction")?;
            let d = *index;
            if d < 1 {
                return Err(argument("subgroup index must be at least 1"));
            }
            let z = window.owner();
            let d64 = d as i64;
            let blown = FiniteSubset::new(
                z,
                window
                    .iter()
                    .flat_map(|k| (0..d64).map(move |g| GroupElement::integer(d64 * k.coords()[0] + g))),
            )?;
            let base = build(inner, &blown, p, side)?;
            Ok(reindex_reduced(base, window, d))
        }
        SubspaceSpec::Induced { inner, index } => {
            require_integers(window, "induction")?;
            let d = *index as i64;
            if d < 1 {
                return Err(argument("subgroup index must be at least 1"));
            }
            let z = window.owner();
            let fiber = inner.fiber_dim();
            let mut parts = Vec::new();
            let mut blocks = None;
            for g in 0..d {
                let slice = FiniteSubset::new(
                    z,
                    window
                        .iter()
                        .filter(|k| k.coords()[0].rem_euclid(d) == g)
                        .map(|k| GroupElement::integer(k.coords()[0].div_euclid(d))),
                )?;
                if slice.is_empty() {
                    continue;
                }
                let model = build(inner, &slice, p, side)?;
                blocks = Some(model.fiber_blocks);
                parts.push(Part {
                    model,
                    point: Box::new(move |k: &GroupElement| GroupElement::integer(d * k.coords()[0] + g)),
                    fiber_offset: 0,
                });
            }
            combine(window, p, fiber, blocks.unwrap_or(1), parts, side, true)
        }
    }
}

fn span_model(window: &FiniteSubset, p: f64, fiber_dim: usize, generators: DMatrix<f64>) -> WindowModel {
    let column_norms = (0..generators.ncols())
        .map(|j| {
            let col: Vec<f64> = generators.column(j).iter().copied().collect();
            block_norm(&col, fiber_dim, p)
        })
        .collect();
    WindowModel {
        window: window.clone(),
        p,
        fiber_dim,
        fiber_blocks: 1,
        generators,
        column_norms,
        polarity: Polarity::Outer,
        lift: None,
        local: false,
    }
}

fn reindex_reduced(base: WindowModel, window: &FiniteSubset, d: usize) -> WindowModel {
    let d64 = d as i64;
    let fiber = base.fiber_dim;
    let lift = base.lift.map(|l| {
        let support = FiniteSubset::new(
            window.owner(),
            l.support.iter().map(|s| GroupElement::integer(s.coords()[0].div_euclid(d64))),
        )
        .expect("integers");
        let nf = fiber * d;
        let mut full = DMatrix::zeros(support.len() * nf, l.full.ncols());
        for (i, s) in l.support.iter().enumerate() {
            let k = s.coords()[0];
            let row = support.index_of(&GroupElement::integer(k.div_euclid(d64))).unwrap() * nf
                + k.rem_euclid(d64) as usize * fiber;
            for v in 0..fiber {
                full.set_row(row + v, &l.full.row(i * fiber + v));
            }
        }
        let restrict = restrict_rows(window, &support, nf);
        Lift {
            support,
            full,
            restrict,
        }
    });
    WindowModel {
        window: window.clone(),
        p: base.p,
        fiber_dim: fiber * d,
        fiber_blocks: base.fiber_blocks * d,
        generators: base.generators,
        column_norms: base.column_norms,
        polarity: base.polarity,
        lift,
        local: base.local,
    }
}

struct Part {
    model: WindowModel,
    point: Box<dyn Fn(&GroupElement) -> GroupElement>,
    fiber_offset: usize,
}

/// Embeds part models into a combined window. With `point_disjoint` the
/// parts occupy disjoint points (cosets); otherwise they share points and
/// occupy disjoint fiber coordinates.
fn combine(
    window: &FiniteSubset,
    p: f64,
    fiber_dim: usize,
    fiber_blocks: usize,
    parts: Vec<Part>,
    side: Side,
    point_disjoint: bool,
) -> Result<WindowModel> {
    let parts: Vec<Part> = parts.into_iter().filter(|pt| pt.model.generators.ncols() > 0).collect();
    let ncols: usize = parts.iter().map(|pt| pt.model.generators.ncols()).sum();
    let all_exact = parts.iter().all(|pt| pt.model.polarity == Polarity::ExactSubspaceBall);
    let polarity = match side {
        Side::Outer => Polarity::Outer,
        Side::Inner if all_exact => Polarity::ExactSubspaceBall,
        Side::Inner => Polarity::Inner,
    };
    let map_row = |pt: &Part, set: &FiniteSubset, target: &FiniteSubset, row: usize| -> usize {
        let f = pt.model.fiber_dim;
        let g = (pt.point)(&set.elements()[row / f]);
        target.index_of(&g).expect("embedded point lies in the target") * fiber_dim + pt.fiber_offset + row % f
    };
    let mut generators = DMatrix::zeros(window.len() * fiber_dim, ncols);
    let mut column_norms = Vec::with_capacity(ncols);
    let mut col = 0;
    for pt in &parts {
        let g = &pt.model.generators;
        for r in 0..g.nrows() {
            let target = map_row(pt, &pt.model.window, window, r);
            for j in 0..g.ncols() {
                generators[(target, col + j)] = g[(r, j)];
            }
        }
        column_norms.extend_from_slice(&pt.model.column_norms);
        col += g.ncols();
    }
    let any_lift = parts.iter().any(|pt| pt.model.lift.is_some());
    let nonlocal_exact = parts.iter().any(|pt| pt.model.lift.is_none() && !pt.model.local);
    if side == Side::Outer || !any_lift {
        let shared_nonlocal = side == Side::Inner && nonlocal_exact && !point_disjoint && parts.len() > 1;
        if shared_nonlocal {
            return Err(capability(
                "direct sums with a non-local exact summand have no inner model",
            ));
        }
        return Ok(WindowModel {
            window: window.clone(),
            p,
            fiber_dim,
            fiber_blocks,
            generators,
            column_norms,
            polarity,
            lift: None,
            local: side == Side::Inner && !nonlocal_exact,
        });
    }
    if nonlocal_exact {
        return Err(capability("cannot combine a non-local exact body with lifted elements"));
    }
    let mut pts = BTreeSet::new();
    for pt in &parts {
        let set = pt.model.lift.as_ref().map_or(&pt.model.window, |l| &l.support);
        pts.extend(set.iter().map(|g| (pt.point)(g)));
    }
    let support = closed_support(&FiniteSubset::new(window.owner(), pts)?, window);
    let mut full = DMatrix::zeros(support.len() * fiber_dim, ncols);
    let mut col = 0;
    for pt in &parts {
        let (set, m) = match &pt.model.lift {
            Some(l) => (&l.support, &l.full),
            None => (&pt.model.window, &pt.model.generators),
        };
        for r in 0..m.nrows() {
            let target = map_row(pt, set, &support, r);
            for j in 0..m.ncols() {
                full[(target, col + j)] = m[(r, j)];
            }
        }
        col += m.ncols();
    }
    let restrict = restrict_rows(window, &support, fiber_dim);
    Ok(WindowModel {
        window: window.clone(),
        p,
        fiber_dim,
        fiber_blocks,
        generators,
        column_norms,
        polarity,
        lift: Some(Lift {
            support,
            full,
            restrict,
        }),
        local: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FourierMode {
    Kernel,
    Image,
}

/// Mean nullity (kernel mode) or mean rank (image mode) of the symbol
/// `ĥ(θ) = Σ_γ h(γ) e^{iγθ}` over `m` midpoint samples of the circle.
pub fn fourier_oracle_dim(h: &ConvolutionKernel, mode: FourierMode, m: usize) -> Result<f64> {
    if !h.group.is_integers() {
        return Err(capability("the Fourier oracle is only available over Z"));
    }
    if m == 0 {
        return Err(argument("need at least one Fourier sample"));
    }
    let mut total = 0usize;
    for j in 0..m {
        let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / m as f64;
        let mut symbol = DMatrix::<Complex64>::zeros(h.dim_out, h.dim_in);
        for (g, b) in h.blocks() {
            let phase = Complex64::from_polar(1.0, g.coords()[0] as f64 * theta);
            symbol += b.map(|t| Complex64::new(t, 0.0)) * phase;
        }
        let sigma = linalg::complex_singular_values(&symbol);
        let rank = linalg::numerical_rank(&sigma);
        total += match mode {
            FourierMode::Kernel => h.dim_in - rank,
            FourierMode::Image => rank,
        };
    }
    Ok(total as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z() -> GroupSpec {
        GroupSpec::integers()
    }

    fn iv(a: i64, b: i64) -> FiniteSubset {
        FiniteSubset::interval(&z(), a, b).unwrap()
    }

    fn diff() -> ConvolutionKernel {
        ConvolutionKernel::scalar(&z(), &[(0, 1.0), (1, -1.0)]).unwrap()
    }

    fn two_to_one() -> ConvolutionKernel {
        ConvolutionKernel::new(
            &z(),
            vec![
                (GroupElement::integer(0), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
                (GroupElement::integer(1), DMatrix::from_row_slice(1, 2, &[0.0, 1.0])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn convolve_examples() {
        let d0 = Field::dirac(&z(), 1, GroupElement::integer(0), 0, 1.0).unwrap();
        let out = diff().convolve(&d0).unwrap();
        assert_eq!(out.get(&GroupElement::integer(0))[0], 1.0);
        assert_eq!(out.get(&GroupElement::integer(1))[0], -1.0);
        assert_eq!(out.support().len(), 2);

        let id = ConvolutionKernel::new(&z(), vec![(z().identity(), DMatrix::identity(2, 2))]).unwrap();
        let y = Field::dirac(&z(), 2, GroupElement::integer(3), 1, 2.5).unwrap();
        assert_eq!(id.convolve(&y).unwrap(), y);
        assert!(diff().convolve(&y).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let h = ConvolutionKernel::scalar(&z(), &[(0, 2.0), (1, 3.0)]).unwrap();
        let a = h.adjoint();
        assert_eq!(a.support(), &iv(-1, 1));
        assert_eq!(a.block(&GroupElement::integer(-1)).unwrap()[(0, 0)], 3.0);
        assert_eq!(a.block(&GroupElement::integer(0)).unwrap()[(0, 0)], 2.0);
        assert_eq!(a.adjoint(), h);

        let y = Field::scalars(&z(), (0..4).map(|k| (GroupElement::integer(k), k as f64 - 1.5))).unwrap();
        let w = Field::scalars(&z(), (-1..5).map(|k| (GroupElement::integer(k), (k * k) as f64))).unwrap();
        let lhs = a.convolve(&w).unwrap().pair(&y).unwrap();
        let rhs = w.pair(&h.convolve(&y).unwrap()).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn annihilator_examples() {
        assert_eq!(
            annihilator_spec(&SubspaceSpec::Full { dim: 2 }).unwrap(),
            SubspaceSpec::Zero { dim: 2 }
        );
        assert_eq!(
            annihilator_spec(&SubspaceSpec::Zero { dim: 2 }).unwrap(),
            SubspaceSpec::Full { dim: 2 }
        );
        let img = SubspaceSpec::ConvImage(diff());
        assert_eq!(annihilator_spec(&img).unwrap(), SubspaceSpec::ConvKernel(diff().adjoint()));
        let sum = SubspaceSpec::direct_sum(img.clone(), SubspaceSpec::Full { dim: 1 });
        assert_eq!(
            annihilator_spec(&sum).unwrap(),
            SubspaceSpec::direct_sum(SubspaceSpec::ConvKernel(diff().adjoint()), SubspaceSpec::Zero { dim: 1 })
        );
        let err = annihilator_spec(&SubspaceSpec::PeriodicInfty { period: 3 }).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
    }

    #[test]
    fn full_and_zero_models() {
        let m = inner_window_model(&SubspaceSpec::Full { dim: 1 }, &iv(0, 4), 1.0).unwrap();
        assert_eq!(m.generators.ncols(), 4);
        assert_eq!(m.polarity, Polarity::ExactSubspaceBall);
        let m = outer_window_model(&SubspaceSpec::Zero { dim: 3 }, &iv(0, 4), 2.0).unwrap();
        assert_eq!(m.generators.shape(), (12, 0));
    }

    #[test]
    fn ker_periodization_model() {
        let m = inner_window_model(&SubspaceSpec::KerPeriodization { period: 2 }, &iv(0, 4), 1.0).unwrap();
        let expect = DMatrix::from_row_slice(
            4,
            4,
            &[0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, -0.5, 0.0, 0.5, 0.0, 0.0, -0.5, 0.0, 0.5],
        );
        assert_eq!(m.generators, expect);
        assert_eq!(linalg::rank(&m.generators), 4);
        assert!(m.column_norms.iter().all(|n| (*n - 1.0).abs() < 1e-15));
    }

    #[test]
    fn conv_kernel_models() {
        let spec = SubspaceSpec::ConvKernel(diff());
        let inner = inner_window_model(&spec, &iv(0, 8), 2.0).unwrap();
        assert_eq!(inner.generators.ncols(), 0);
        let outer = outer_window_model(&spec, &iv(0, 8), 2.0).unwrap();
        assert_eq!(outer.generators.ncols(), 1);
        let c = outer.generators.column(0);
        assert!(c.iter().all(|t| (t - c[0]).abs() < 1e-12));

        let spec = SubspaceSpec::ConvKernel(two_to_one());
        let inner = inner_window_model(&spec, &iv(0, 16), 2.0).unwrap();
        assert_eq!(inner.generators.ncols(), 15);
        let outer = outer_window_model(&spec, &iv(0, 16), 2.0).unwrap();
        assert_eq!(outer.generators.ncols(), 17);
    }

    #[test]
    fn inner_columns_are_unit_elements_of_y() {
        let specs = [
            SubspaceSpec::ConvImage(diff()),
            SubspaceSpec::ConvKernel(two_to_one()),
            SubspaceSpec::KerPeriodization { period: 3 },
            SubspaceSpec::CyclicTranslates(Generator::truncated_geometric(3, 6, 0.1).unwrap()),
            SubspaceSpec::direct_sum(SubspaceSpec::ConvImage(diff()), SubspaceSpec::Full { dim: 1 }),
        ];
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            for spec in &specs {
                let m = inner_window_model(spec, &iv(0, 10), p).unwrap();
                let cols = m.lifted_columns();
                for (y, norm) in cols.iter().zip(&m.column_norms) {
                    assert!(y.norm(p) <= 1.0 + 1e-12);
                    assert_relative_eq!(y.norm(p), *norm, epsilon = 1e-12);
                }
                if let SubspaceSpec::ConvKernel(h) = spec {
                    for y in &cols {
                        assert!(h.convolve(y).unwrap().norm(2.0) < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn fourier_oracle_examples() {
        assert_relative_eq!(fourier_oracle_dim(&diff(), FourierMode::Image, 64).unwrap(), 1.0);
        assert_relative_eq!(fourier_oracle_dim(&diff(), FourierMode::Kernel, 64).unwrap(), 0.0);
        assert_relative_eq!(fourier_oracle_dim(&two_to_one(), FourierMode::Kernel, 64).unwrap(), 1.0);
        let id = ConvolutionKernel::new(&z(), vec![(z().identity(), DMatrix::identity(3, 3))]).unwrap();
        assert_relative_eq!(fourier_oracle_dim(&id, FourierMode::Image, 8).unwrap(), 3.0);
        let z2 = GroupSpec::lattice(2).unwrap();
        let h2 = ConvolutionKernel::new(&z2, vec![(z2.identity(), DMatrix::identity(1, 1))]).unwrap();
        assert!(matches!(
            fourier_oracle_dim(&h2, FourierMode::Image, 8),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn reduce_and_induce_rules() {
        let full = SubspaceSpec::Full { dim: 1 };
        assert_eq!(reduce_spec(&full, 3).unwrap(), SubspaceSpec::Full { dim: 3 });
        assert_eq!(reduce_spec(&SubspaceSpec::ConvImage(diff()), 1).unwrap(), SubspaceSpec::ConvImage(diff()));
        assert_eq!(induce_spec(&full, 2).unwrap(), full);
        assert!(reduce_spec(&full, 0).is_err());
        assert!(induce_spec(&full, 0).is_err());
    }

    #[test]
    fn reduced_model_is_a_relabeling() {
        let spec = SubspaceSpec::ConvImage(diff());
        let base = inner_window_model(&spec, &iv(0, 12), 2.0).unwrap();
        let red = inner_window_model(&reduce_spec(&spec, 3).unwrap(), &iv(0, 4), 2.0).unwrap();
        assert_eq!(red.fiber_dim, 3);
        assert_eq!(red.generators, base.generators);
    }

    #[test]
    fn spec_json_roundtrip() {
        let raw = r#"{"type":"conv_kernel","support":[[0],[1]],"blocks":[[[1.0]],[[-1.0]]]}"#;
        let spec: SubspaceSpec = serde_json::from_str(raw).unwrap();
        assert_eq!(spec, SubspaceSpec::ConvKernel(diff()));
        let back: SubspaceSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);

        let raw = r#"{"type":"cyclic","generator":{"0":1.0,"1":0.1},"shape":[[0]],"eps0":0.2}"#;
        let spec: SubspaceSpec = serde_json::from_str(raw).unwrap();
        assert_eq!(spec.fiber_dim(), 1);
        let raw = r#"{"type":"direct_sum","left":{"type":"full","dim":2},"right":{"type":"periodic_union"}}"#;
        let spec: SubspaceSpec = serde_json::from_str(raw).unwrap();
        assert_eq!(spec.fiber_dim(), 3);
    }
}
